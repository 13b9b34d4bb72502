mod common;

use std::collections::BTreeSet;

use novobo_core::knowledge::{GestureTypeKey, IntentionKey, KbDocument, KbError, TaxonomyKind};
use novobo_core::llm::stub::StubChat;
use novobo_core::retrieval::{build_index, StubEmbedder};
use novobo_core::agents::run_generation_pipeline;
use novobo_core::{fixtures, KnowledgeBase, ScenarioCatalog};

#[test]
fn canonical_key_sets() {
    let kb = KnowledgeBase::from_json(fixtures::CANONICAL_KB).unwrap();
    let types: BTreeSet<&str> = kb.gesture_types().map(|g| g.id.as_str()).collect();
    let intentions: BTreeSet<&str> = kb.intentions().map(|i| i.id.as_str()).collect();
    assert_eq!(
        types,
        BTreeSet::from(["iconic", "metaphoric", "deictic", "emblematic"])
    );
    assert_eq!(
        intentions,
        BTreeSet::from([
            "explain_complex",
            "attract_attention",
            "positive_feedback",
            "impart_new_knowledge",
            "role_modeling"
        ])
    );
}

#[test]
fn deleting_any_taxonomy_row_fails_load() {
    let doc = KbDocument::from_json(fixtures::CANONICAL_KB).unwrap();
    for i in 0..doc.gesture_types.len() {
        let mut d = doc.clone();
        let removed = d.gesture_types.remove(i);
        assert_eq!(
            KnowledgeBase::from_document(d).unwrap_err(),
            KbError::MissingTaxonomyEntry {
                kind: TaxonomyKind::GestureType,
                key: removed.id
            }
        );
    }
    for i in 0..doc.intentions.len() {
        let mut d = doc.clone();
        let removed = d.intentions.remove(i);
        assert_eq!(
            KnowledgeBase::from_document(d).unwrap_err(),
            KbError::MissingTaxonomyEntry {
                kind: TaxonomyKind::Intention,
                key: removed.id
            }
        );
    }
}

#[test]
fn every_gesture_intention_pair_has_references() {
    let kb = KnowledgeBase::from_json(fixtures::CANONICAL_KB).unwrap();
    for g in GestureTypeKey::ALL {
        for i in IntentionKey::ALL {
            let refs = kb.references_for(g, i);
            assert!(!refs.is_empty(), "{g}/{i}");
            let unique: BTreeSet<&String> = refs.iter().collect();
            assert_eq!(unique.len(), refs.len());
            assert!(refs.iter().all(|k| kb.citation(k).is_some()));
        }
    }
}

#[tokio::test]
async fn citations_resolve_across_seeds_and_scenarios() {
    let kb = common::kb();
    let embedder = StubEmbedder::new(0, common::EMBED_DIM);
    let index = build_index(&kb, &embedder).await.unwrap();
    let catalog = ScenarioCatalog::from_json(fixtures::SCENARIO_CATALOG).unwrap();
    let mut proposals = 0;
    for seed in 0..40u64 {
        for entry in &catalog.entries {
            let stub = StubChat::new(seed);
            let set = run_generation_pipeline(&stub, &kb, &index, &embedder, &entry.scenario)
                .await
                .unwrap();
            for p in set.iter() {
                assert!(!p.references.is_empty());
                for key in &p.references {
                    assert!(kb.citation(key).is_some(), "seed {seed}: {key}");
                }
                proposals += 1;
            }
        }
    }
    assert!(proposals >= 320);
}
