mod common;

use std::sync::Arc;

use novobo_core::llm::stub::{StubAgent, StubChat};
use novobo_core::session::{Rating, Session, SessionError, SkeletalRecording, Stage};
use novobo_core::{Engine, TeachingScenario};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Op {
    Scenario { valid: bool },
    Commentary { defect: Option<u8> },
    Demonstration { valid: bool },
    Explanation { valid: bool },
}

impl Op {
    fn required(&self) -> Stage {
        match self {
            Op::Scenario { .. } => Stage::PosingQuestion,
            Op::Commentary { .. } => Stage::Commentary,
            Op::Demonstration { .. } => Stage::Demonstration,
            Op::Explanation { .. } => Stage::Explanation,
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Op::Scenario { valid } | Op::Demonstration { valid } | Op::Explanation { valid } => *valid,
            Op::Commentary { defect } => defect.is_none(),
        }
    }
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![
        prop::bool::weighted(0.8).prop_map(|valid| Op::Scenario { valid }),
        prop::option::weighted(0.2, 0u8..4).prop_map(|defect| Op::Commentary { defect }),
        prop::bool::weighted(0.8).prop_map(|valid| Op::Demonstration { valid }),
        prop::bool::weighted(0.8).prop_map(|valid| Op::Explanation { valid }),
    ]
}

fn ratings(session: &Session, defect: Option<u8>) -> Vec<Rating> {
    let n = session.current_round().map_or(1, |r| r.proposals.len());
    let mut out: Vec<Rating> = (0..n as u32)
        .map(|i| Rating {
            proposal_ordinal: i,
            stars: (i % 5 + 1) as u8,
            comment: format!("note {i}"),
        })
        .collect();
    match defect {
        None => {}
        Some(0) => {
            out.pop();
        }
        Some(1) => out[0].stars = 0,
        Some(2) => out[0].stars = 6,
        _ => out[0].comment.clear(),
    }
    out
}

async fn apply(engine: &Engine, s: &mut Session, op: &Op) -> Result<(), SessionError> {
    match op {
        Op::Scenario { valid } => {
            let text = if *valid { "Water evaporates from the lake and forms clouds." } else { "" };
            engine.submit_scenario(s, TeachingScenario::custom(text), None).await.map(|_| ())
        }
        Op::Commentary { defect } => {
            let r = ratings(s, *defect);
            engine.submit_commentary(s, r, None).await.map(|_| ())
        }
        Op::Demonstration { valid } => {
            let mut rec = SkeletalRecording::synthetic_wave(30, 30);
            if !valid {
                rec.frames[3].t_ms = 0;
            }
            engine.attach_demonstration(s, rec, None).await.map(|_| ())
        }
        Op::Explanation { valid } => {
            let text = if *valid { "I sweep one hand upward like rising vapour." } else { "  " };
            engine.submit_explanation(s, text, None).await.map(|_| ())
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transitions_follow_the_cycle(ops in prop::collection::vec(op(), 1..24), seed in 0u64..1000) {
        let rt = tokio::runtime::Builder::new_current_thread().build().unwrap();
        rt.block_on(async {
            let stub = Arc::new(StubChat::new(seed).with_rule(
                StubAgent::Analyzer,
                "Water evaporates",
                common::findings(&[("explain_complex", true), ("attract_attention", true)]),
            ));
            let engine = common::engine(stub).await;
            let mut s = Session::new(None);
            for op in &ops {
                let before = s.export();
                let stage = s.stage;
                let rounds = s.rounds.len();
                match apply(&engine, &mut s, op).await {
                    Ok(()) => {
                        prop_assert_eq!(op.required(), stage);
                        prop_assert!(op.is_valid());
                        prop_assert_eq!(s.stage, stage.next());
                        let grew = usize::from(stage == Stage::PosingQuestion);
                        prop_assert_eq!(s.rounds.len(), rounds + grew);
                    }
                    Err(e) => {
                        if op.required() != stage {
                            prop_assert_eq!(
                                e,
                                SessionError::WrongStage { expected: op.required(), actual: stage }
                            );
                        } else {
                            prop_assert!(!op.is_valid(), "valid op failed: {e:?}");
                        }
                        prop_assert_eq!(s.export(), before);
                    }
                }
                prop_assert_eq!(s.check_invariants(), Ok(()));
                prop_assert_eq!(Session::import(&s.export()).unwrap(), s.clone());
            }
            Ok(())
        })?;
    }
}
