mod common;

use std::sync::Arc;

use novobo_core::agents::{
    analyze_intentions, generate_gesture_proposal, run_generation_pipeline, AgentError,
    IntentionFinding, Violation, MAX_PROPOSALS,
};
use novobo_core::knowledge::{IntentionKey, KnowledgeBase};
use novobo_core::llm::stub::{StubAgent, StubChat};
use novobo_core::llm::{ModelRole, ProviderError, ProviderErrorKind, Speaker};
use novobo_core::retrieval::{build_index, ExemplarIndex, RetrievalHit, StubEmbedder};
use novobo_core::TeachingScenario;

use common::{findings, gesture, kb, EMBED_DIM};

const LEAVES: &str = "The leaves gently fell down.";

fn leaves() -> TeachingScenario {
    TeachingScenario::custom(LEAVES)
}

fn needs(intention: IntentionKey) -> IntentionFinding {
    IntentionFinding {
        intention,
        needs_gesture: true,
        rationale: "fixture".into(),
    }
}

async fn index(kb: &KnowledgeBase) -> ExemplarIndex {
    build_index(kb, &StubEmbedder::new(0, EMBED_DIM)).await.unwrap()
}

#[tokio::test]
async fn leaves_scenario_yields_explain_complex() {
    let stub = StubChat::new(0).with_rule(
        StubAgent::Analyzer,
        LEAVES,
        findings(&[("explain_complex", true)]),
    );
    let out = analyze_intentions(&stub, &kb(), &leaves()).await.unwrap();
    assert_eq!(out, vec![needs(IntentionKey::ExplainComplex)]);
    assert_eq!(stub.call_count(StubAgent::Analyzer), 1);
}

#[tokio::test]
async fn unknown_intention_is_retried_once() {
    let stub = StubChat::new(0);
    stub.script(StubAgent::Analyzer, findings(&[("motivate", true)]));
    let out = analyze_intentions(&stub, &kb(), &leaves()).await.unwrap();
    assert!(!out.is_empty());
    assert_eq!(stub.call_count(StubAgent::Analyzer), 2);

    let retry = &stub.requests()[1];
    let last = retry.messages.last().unwrap();
    assert_eq!(last.speaker, Speaker::User);
    assert!(last.text.contains("UnknownIntention"), "{}", last.text);
    assert!(last.text.contains("motivate"));
    assert_eq!(retry.messages[1].speaker, Speaker::Assistant);
}

#[tokio::test]
async fn three_malformed_replies_exhaust_retries() {
    let stub = StubChat::new(0);
    for _ in 0..3 {
        stub.script(StubAgent::Analyzer, "I think the teacher wants to explain.");
    }
    let err = analyze_intentions(&stub, &kb(), &leaves()).await.unwrap_err();
    assert!(matches!(err, AgentError::MalformedOutput { attempts: 3, .. }), "{err:?}");
    assert_eq!(err.code(), "MalformedOutput");
    assert_eq!(stub.call_count(StubAgent::Analyzer), 3);
}

#[tokio::test]
async fn provider_errors_are_not_retried() {
    let stub = StubChat::new(0);
    stub.script_failure(
        StubAgent::Analyzer,
        ProviderError::new(ProviderErrorKind::Auth, "bad key"),
    );
    let err = analyze_intentions(&stub, &kb(), &leaves()).await.unwrap_err();
    assert!(matches!(err, AgentError::Provider(_)));
    assert_eq!(stub.call_count(StubAgent::Analyzer), 1);
}

#[tokio::test]
async fn proposal_uses_hit_and_kb_citations() {
    let kb = kb();
    let stub = StubChat::new(0);
    let hit = RetrievalHit {
        exemplar_id: 3,
        score: 0.9,
    };
    let p = generate_gesture_proposal(&stub, &kb, &leaves(), &needs(IntentionKey::ExplainComplex), Some(hit))
        .await
        .unwrap();
    assert_eq!(p.few_shot_exemplar_id, Some(3));
    assert!(!p.references.is_empty());
    for key in &p.references {
        assert!(kb.citation(key).is_some(), "{key}");
    }
    assert_eq!(p.references, kb.references_for(p.gesture_type, p.intention));
    let task = &stub.requests()[0].messages[0].text;
    assert!(task.contains(&kb.exemplar(3).unwrap().gesture_description));
}

#[tokio::test]
async fn proposal_without_hit_has_no_exemplar() {
    let stub = StubChat::new(0);
    let p = generate_gesture_proposal(&stub, &kb(), &leaves(), &needs(IntentionKey::AttractAttention), None)
        .await
        .unwrap();
    assert_eq!(p.few_shot_exemplar_id, None);
}

#[tokio::test]
async fn finding_without_need_is_a_precondition_error() {
    let stub = StubChat::new(0);
    let mut f = needs(IntentionKey::PositiveFeedback);
    f.needs_gesture = false;
    let err = generate_gesture_proposal(&stub, &kb(), &leaves(), &f, None).await.unwrap_err();
    assert!(matches!(err, AgentError::Precondition(_)));
    assert_eq!(stub.call_count(StubAgent::Generator), 0);
}

#[tokio::test]
async fn beat_gesture_type_is_rejected() {
    let stub = StubChat::new(0).with_rule(StubAgent::Generator, LEAVES, gesture("beat"));
    let err = generate_gesture_proposal(&stub, &kb(), &leaves(), &needs(IntentionKey::ExplainComplex), None)
        .await
        .unwrap_err();
    match err {
        AgentError::MalformedOutput { output, attempts } => {
            assert_eq!(attempts, 3);
            assert_eq!(output.violation, Violation::UnknownGestureType("beat".into()));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(stub.call_count(StubAgent::Generator), 3);
}

#[tokio::test]
async fn six_findings_give_four_proposals() {
    let kb = kb();
    let index = index(&kb).await;
    let all: Vec<(&str, bool)> = IntentionKey::ALL
        .iter()
        .map(|k| (k.as_str(), true))
        .chain([("explain_complex", true)])
        .collect();
    assert_eq!(all.len(), 6);
    let stub = StubChat::new(0).with_rule(StubAgent::Analyzer, LEAVES, findings(&all));
    let set = run_generation_pipeline(&stub, &kb, &index, &StubEmbedder::new(0, EMBED_DIM), &leaves())
        .await
        .unwrap();
    assert_eq!(set.len(), MAX_PROPOSALS);
    let ordinals: Vec<u32> = set.iter().map(|p| p.ordinal).collect();
    assert_eq!(ordinals, [0, 1, 2, 3]);
    let intentions: Vec<IntentionKey> = set.iter().map(|p| p.intention).collect();
    assert_eq!(intentions, IntentionKey::ALL[..4]);
    assert_eq!(stub.call_count(StubAgent::Generator), 4);
    assert!(set.iter().all(|p| p.few_shot_exemplar_id.is_some()));
}

#[tokio::test]
async fn findings_without_need_are_skipped_in_order() {
    let kb = kb();
    let index = index(&kb).await;
    let stub = StubChat::new(0).with_rule(
        StubAgent::Analyzer,
        LEAVES,
        findings(&[
            ("attract_attention", false),
            ("impart_new_knowledge", true),
            ("positive_feedback", false),
            ("explain_complex", true),
        ]),
    );
    let set = run_generation_pipeline(&stub, &kb, &index, &StubEmbedder::new(0, EMBED_DIM), &leaves())
        .await
        .unwrap();
    let got: Vec<(u32, IntentionKey)> = set.iter().map(|p| (p.ordinal, p.intention)).collect();
    assert_eq!(
        got,
        [(0, IntentionKey::ImpartNewKnowledge), (1, IntentionKey::ExplainComplex)]
    );
}

#[tokio::test]
async fn no_needed_gesture_is_signalled() {
    let kb = kb();
    let index = index(&kb).await;
    let stub = StubChat::new(0).with_rule(
        StubAgent::Analyzer,
        LEAVES,
        findings(&[("attract_attention", false), ("positive_feedback", false)]),
    );
    let err = run_generation_pipeline(&stub, &kb, &index, &StubEmbedder::new(0, EMBED_DIM), &leaves())
        .await
        .unwrap_err();
    assert!(matches!(err, AgentError::NoGestureNeeded { ref findings } if findings.len() == 2));
    assert_eq!(stub.call_count(StubAgent::Generator), 0);
}

#[tokio::test]
async fn pipeline_is_deterministic_per_seed() {
    let kb = kb();
    let index = index(&kb).await;
    let embedder = StubEmbedder::new(0, EMBED_DIM);
    let scenario = novobo_core::ScenarioCatalog::from_json(novobo_core::fixtures::SCENARIO_CATALOG)
        .unwrap()
        .get("photosynthesis")
        .unwrap()
        .clone();
    let run = |seed| {
        let (kb, index, scenario) = (kb.clone(), &index, scenario.clone());
        async move {
            let stub = StubChat::new(seed);
            let set = run_generation_pipeline(&stub, &kb, index, &embedder, &scenario)
                .await
                .unwrap();
            serde_json::to_string(&set).unwrap()
        }
    };
    assert_eq!(run(11).await, run(11).await);
}

#[tokio::test]
async fn model_roles_and_temperatures() {
    let kb = kb();
    let index = index(&kb).await;
    let stub = StubChat::new(5);
    run_generation_pipeline(&stub, &kb, &index, &StubEmbedder::new(0, EMBED_DIM), &leaves())
        .await
        .unwrap();
    let requests = stub.requests();
    assert!(requests.len() >= 2);
    for r in requests {
        assert_eq!(r.model_role, ModelRole::Reasoning);
        assert_eq!(r.temperature, 0.0);
    }
}

#[tokio::test]
async fn empty_index_skips_retrieval() {
    let kb = kb();
    let index = ExemplarIndex::from_entries(EMBED_DIM, Vec::new()).unwrap();
    let stub = Arc::new(StubChat::new(2));
    let set = run_generation_pipeline(stub.as_ref(), &kb, &index, &StubEmbedder::new(0, EMBED_DIM), &leaves())
        .await
        .unwrap();
    assert!(set.iter().all(|p| p.few_shot_exemplar_id.is_none()));
}
