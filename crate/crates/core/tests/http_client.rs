use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use futures::StreamExt;
use novobo_core::llm::http::{OpenAiCompatChat, OpenAiCompatEmbedder, RoleModels};
use novobo_core::llm::{ChatMessage, ChatProvider, LlmRequest, ModelRole, ProviderErrorKind, SchemaId};
use novobo_core::retrieval::Embedder;
use serde_json::{json, Value};

type Seen = Arc<Mutex<Vec<Value>>>;

fn authorized(headers: &HeaderMap) -> bool {
    headers.get("authorization").and_then(|v| v.to_str().ok()) == Some("Bearer secret")
}

async fn chat(State(seen): State<Seen>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    if !authorized(&headers) {
        return (StatusCode::UNAUTHORIZED, "bad key").into_response();
    }
    seen.lock().unwrap().push(body.clone());
    if body["stream"] == json!(true) {
        let mut sse = String::new();
        for piece in ["Thank ", "you ", "", "for the scenario."] {
            let event = json!({"choices": [{"delta": {"content": piece}}]});
            sse.push_str(&format!("data: {event}\n\n"));
        }
        sse.push_str("data: [DONE]\n\n");
        return ([("content-type", "text/event-stream")], sse).into_response();
    }
    Json(json!({
        "choices": [{"message": {"role": "assistant", "content": "{\"summary\": \"ok\"}"}}],
        "usage": {"prompt_tokens": 12, "completion_tokens": 3}
    }))
    .into_response()
}

async fn embeddings(headers: HeaderMap, Json(body): Json<Value>) -> Response {
    if !authorized(&headers) {
        return StatusCode::UNAUTHORIZED.into_response();
    }
    let dim = body["dimensions"].as_u64().unwrap_or(3) as usize;
    let v: Vec<f64> = (0..dim).map(|i| i as f64 / 10.0).collect();
    Json(json!({"data": [{"embedding": v}]})).into_response()
}

async fn spawn() -> (String, Seen) {
    let seen = Seen::default();
    let app = Router::new()
        .route("/v1/chat/completions", post(chat))
        .route("/v1/embeddings", post(embeddings))
        .with_state(seen.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (format!("http://{addr}/v1/"), seen)
}

fn models() -> RoleModels {
    RoleModels {
        reasoning: "big-model".into(),
        chat: "fast-model".into(),
    }
}

fn request(role: ModelRole, schema: Option<SchemaId>) -> LlmRequest {
    LlmRequest {
        model_role: role,
        system_prompt: "You are a test.".into(),
        messages: vec![ChatMessage::user("hello")],
        response_schema: schema,
        temperature: 0.0,
    }
}

#[tokio::test]
async fn completion_maps_roles_and_schema() {
    let (endpoint, seen) = spawn().await;
    let client = OpenAiCompatChat::new(&endpoint, "secret", models());
    let r = client
        .complete(&request(ModelRole::Reasoning, Some(SchemaId::Summary)))
        .await
        .unwrap();
    assert_eq!(r.raw_text, "{\"summary\": \"ok\"}");
    assert_eq!(r.usage.prompt_tokens, 12);
    let body = seen.lock().unwrap()[0].clone();
    assert_eq!(body["model"], "big-model");
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "hello");
    assert_eq!(body["response_format"]["type"], "json_object");
}

#[tokio::test]
async fn streaming_yields_deltas() {
    let (endpoint, seen) = spawn().await;
    let client = OpenAiCompatChat::new(&endpoint, "secret", models());
    let chunks: Vec<String> = client
        .stream(&request(ModelRole::Chat, None))
        .await
        .unwrap()
        .map(|c| c.unwrap())
        .collect()
        .await;
    assert_eq!(chunks, ["Thank ", "you ", "for the scenario."]);
    let body = seen.lock().unwrap()[0].clone();
    assert_eq!(body["model"], "fast-model");
    assert!(body.get("response_format").is_none());
}

#[tokio::test]
async fn bad_key_is_an_auth_error() {
    let (endpoint, _) = spawn().await;
    let client = OpenAiCompatChat::new(&endpoint, "wrong", models());
    let err = client.complete(&request(ModelRole::Chat, None)).await.unwrap_err();
    assert_eq!(err.kind, ProviderErrorKind::Auth);
    assert!(!err.retryable);
}

#[tokio::test]
async fn unreachable_endpoint_is_a_network_error() {
    let client = OpenAiCompatChat::new("http://127.0.0.1:9/v1", "secret", models());
    let err = client.complete(&request(ModelRole::Chat, None)).await.unwrap_err();
    assert_eq!(err.kind, ProviderErrorKind::Network);
    assert!(err.retryable);
}

#[tokio::test]
async fn embeddings_round_trip() {
    let (endpoint, _) = spawn().await;
    let e = OpenAiCompatEmbedder::new(&endpoint, "secret", "embed-model", 4);
    assert_eq!(e.dim(), 4);
    assert_eq!(e.embed("leaves").await.unwrap(), vec![0.0, 0.1, 0.2, 0.3]);
    let bad = OpenAiCompatEmbedder::new(&endpoint, "nope", "embed-model", 4);
    assert_eq!(bad.embed("leaves").await.unwrap_err().kind, ProviderErrorKind::Auth);
}
