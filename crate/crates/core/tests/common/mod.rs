#![allow(dead_code)]

use std::sync::Arc;

use novobo_core::fixtures;
use novobo_core::llm::stub::StubChat;
use novobo_core::retrieval::StubEmbedder;
use novobo_core::{Engine, KnowledgeBase};
use serde_json::json;

pub const EMBED_DIM: usize = 64;

pub fn kb() -> Arc<KnowledgeBase> {
    Arc::new(KnowledgeBase::from_json(fixtures::CANONICAL_KB).expect("canonical kb"))
}

pub async fn engine(chat: Arc<StubChat>) -> Engine {
    Engine::build(kb(), chat, Arc::new(StubEmbedder::new(0, EMBED_DIM)))
        .await
        .expect("index builds")
}

pub fn findings(items: &[(&str, bool)]) -> String {
    let findings: Vec<_> = items
        .iter()
        .map(|(intention, needs)| {
            json!({"intention": intention, "needs_gesture": needs, "rationale": "fixture"})
        })
        .collect();
    json!({ "findings": findings }).to_string()
}

pub fn gesture(kind: &str) -> String {
    json!({
        "gesture_type": kind,
        "description": "Let both hands drift downward, swaying side to side.",
        "rationale": "fixture"
    })
    .to_string()
}
