use futures::future::try_join_all;

use super::prompts::{self, AgentKind};
use super::structured::GestureDraft;
use super::{
    call_structured, AgentError, GestureProposal, IntentionFinding, ProposalSet, StructuredValue,
    ANALYSIS_TEMPERATURE, MAX_PROPOSALS,
};
use crate::knowledge::KnowledgeBase;
use crate::llm::{ChatMessage, ChatProvider, LlmRequest, ModelRole, SchemaId};
use crate::retrieval::{compose_query, embed_text, Embedder, ExemplarIndex, RetrievalHit};
use crate::scenario::TeachingScenario;

/// Intentions the teacher could have in `scenario`, each flagged with
/// whether a gesture would serve it.
pub async fn analyze_intentions(
    chat: &dyn ChatProvider,
    kb: &KnowledgeBase,
    scenario: &TeachingScenario,
) -> Result<Vec<IntentionFinding>, AgentError> {
    scenario
        .validate()
        .map_err(|e| AgentError::Precondition(e.to_string()))?;
    let request = LlmRequest {
        model_role: ModelRole::Reasoning,
        system_prompt: prompts::assemble_system_prompt(kb, AgentKind::IntentionAnalyzer),
        messages: vec![ChatMessage::user(prompts::analyzer_task(scenario))],
        response_schema: Some(SchemaId::IntentionFindings),
        temperature: ANALYSIS_TEMPERATURE,
    };
    match call_structured(chat, request).await? {
        StructuredValue::Findings(findings) => Ok(findings),
        other => unreachable!("findings schema produced {other:?}"),
    }
}

/// One gesture for one finding. The retrieved exemplar, when present, is
/// injected as a few-shot example. References come from the knowledge
/// base entries for the chosen gesture type and the finding's intention,
/// never from the model. The returned proposal has ordinal 0.
pub async fn generate_gesture_proposal(
    chat: &dyn ChatProvider,
    kb: &KnowledgeBase,
    scenario: &TeachingScenario,
    finding: &IntentionFinding,
    hit: Option<RetrievalHit>,
) -> Result<GestureProposal, AgentError> {
    if !finding.needs_gesture {
        return Err(AgentError::Precondition(format!(
            "finding for {} does not need a gesture",
            finding.intention
        )));
    }
    let example = match hit {
        Some(h) => Some(kb.exemplar(h.exemplar_id).ok_or_else(|| {
            AgentError::Precondition(format!(
                "retrieved exemplar {} is not in the knowledge base",
                h.exemplar_id
            ))
        })?),
        None => None,
    };
    let request = LlmRequest {
        model_role: ModelRole::Reasoning,
        system_prompt: prompts::assemble_system_prompt(kb, AgentKind::GestureGenerator),
        messages: vec![ChatMessage::user(prompts::generator_task(
            kb, scenario, finding, example,
        ))],
        response_schema: Some(SchemaId::GestureProposal),
        temperature: ANALYSIS_TEMPERATURE,
    };
    let GestureDraft {
        gesture_type,
        description,
        rationale,
    } = match call_structured(chat, request).await? {
        StructuredValue::Gesture(draft) => draft,
        other => unreachable!("gesture schema produced {other:?}"),
    };
    Ok(GestureProposal {
        ordinal: 0,
        description,
        intention: finding.intention,
        gesture_type,
        rationale,
        references: kb.references_for(gesture_type, finding.intention),
        few_shot_exemplar_id: hit.map(|h| h.exemplar_id),
    })
}

async fn retrieve_for(
    kb: &KnowledgeBase,
    index: &ExemplarIndex,
    embedder: &dyn Embedder,
    scenario: &TeachingScenario,
    finding: &IntentionFinding,
) -> Result<Option<RetrievalHit>, AgentError> {
    if index.is_empty() {
        return Ok(None);
    }
    let query = compose_query(
        &scenario.scenario_text,
        &kb.intention(finding.intention).description,
    );
    let vector = embed_text(embedder, &query).await?;
    Ok(index.retrieve_most_similar(&vector)?)
}

/// Analysis, then retrieval and generation for each finding that needs a
/// gesture, in finding order and capped at [`MAX_PROPOSALS`].
///
/// Generations run concurrently; results keep finding order.
pub async fn run_generation_pipeline(
    chat: &dyn ChatProvider,
    kb: &KnowledgeBase,
    index: &ExemplarIndex,
    embedder: &dyn Embedder,
    scenario: &TeachingScenario,
) -> Result<ProposalSet, AgentError> {
    let findings = analyze_intentions(chat, kb, scenario).await?;
    let selected: Vec<&IntentionFinding> = findings
        .iter()
        .filter(|f| f.needs_gesture)
        .take(MAX_PROPOSALS)
        .collect();
    if selected.is_empty() {
        return Err(AgentError::NoGestureNeeded { findings });
    }
    let proposals = try_join_all(selected.into_iter().map(|finding| async move {
        let hit = retrieve_for(kb, index, embedder, scenario, finding).await?;
        generate_gesture_proposal(chat, kb, scenario, finding, hit).await
    }))
    .await?;
    Ok(ProposalSet::new(
        proposals
            .into_iter()
            .enumerate()
            .map(|(i, p)| GestureProposal {
                ordinal: i as u32,
                ..p
            })
            .collect(),
    ))
}
