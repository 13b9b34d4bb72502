//! The mentee persona: stage guidance, acknowledgments, and round summaries.

use std::fmt::Write;

use futures::StreamExt;
use tokio::sync::mpsc::UnboundedSender;

use super::prompts::{self, labels, AgentKind};
use super::{
    call_structured, AgentError, MenteeMessage, StructuredValue, MAX_RETRIES, PERSONA_TEMPERATURE,
};
use crate::knowledge::KnowledgeBase;
use crate::llm::{ChatMessage, ChatProvider, LlmRequest, ModelRole, SchemaId};
use crate::session::{Rating, Round, SkeletalRecording, Stage};

/// Receives reply text chunks as they stream in.
pub type ChunkSink = UnboundedSender<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MenteeEvent {
    StageEntered(Stage),
    RatingsSubmitted,
    DemonstrationAttached,
    ExplanationSubmitted,
}

impl MenteeEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            MenteeEvent::StageEntered(_) => "stage_entered",
            MenteeEvent::RatingsSubmitted => "ratings_submitted",
            MenteeEvent::DemonstrationAttached => "demonstration_attached",
            MenteeEvent::ExplanationSubmitted => "explanation_submitted",
        }
    }

    /// The stage the reply belongs to.
    pub fn stage_hint(self) -> Stage {
        match self {
            MenteeEvent::StageEntered(s) => s,
            MenteeEvent::RatingsSubmitted => Stage::Commentary,
            MenteeEvent::DemonstrationAttached => Stage::Demonstration,
            MenteeEvent::ExplanationSubmitted => Stage::Explanation,
        }
    }
}

/// Read-only context handed to the persona.
#[derive(Debug, Clone, Copy)]
pub struct SessionView<'a> {
    pub stage: Stage,
    pub round: Option<&'a Round>,
    pub completed_rounds: usize,
}

pub fn feedback_payload(round: &Round, ratings: &[Rating]) -> String {
    let mut out = format!("{}\n", labels::FEEDBACK);
    for r in ratings {
        let kind = round
            .proposal(r.proposal_ordinal)
            .map(|p| format!(", {}", p.gesture_type))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "- Gesture {} ({} stars{kind}): {}",
            r.proposal_ordinal + 1,
            r.stars,
            one_line(&r.comment)
        );
    }
    out
}

pub fn demonstration_payload(recording: &SkeletalRecording) -> String {
    format!(
        "{}: {} frames over {} ms at {} fps\n",
        labels::DEMONSTRATION,
        recording.frames.len(),
        recording.duration_ms(),
        recording.fps_nominal
    )
}

pub fn explanation_payload(text: &str) -> String {
    format!("{}: {}\n", labels::EXPLANATION, one_line(text))
}

pub fn note_payload(text: &str) -> String {
    format!("{}: {}\n", labels::NOTE, one_line(text))
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn mentee_task(view: &SessionView<'_>, event: MenteeEvent, payload: &str) -> String {
    let mut t = String::from("Reply to the teachers.\n");
    let _ = writeln!(t, "{}: {}", labels::EVENT, event.as_str());
    let _ = writeln!(t, "{}: {}", labels::STAGE, event.stage_hint());
    let _ = writeln!(t, "Completed rounds: {}", view.completed_rounds);
    if let Some(round) = view.round {
        t.push_str(&round.scenario.render());
        t.push('\n');
        let _ = writeln!(t, "{}: {}", labels::PROPOSAL_COUNT, round.proposals.len());
        for p in round.proposals.iter() {
            let _ = writeln!(
                t,
                "Gesture {} ({}, {}): {}",
                p.ordinal + 1,
                p.gesture_type,
                p.intention,
                p.description
            );
        }
    }
    t.push_str(payload);
    t
}

async fn collect(
    chat: &dyn ChatProvider,
    request: &LlmRequest,
    sink: Option<&ChunkSink>,
) -> Result<String, AgentError> {
    let Some(sink) = sink else {
        return Ok(chat.complete(request).await?.raw_text);
    };
    let mut stream = chat.stream(request).await?;
    let mut text = String::new();
    while let Some(chunk) = stream.next().await {
        let chunk = chunk?;
        // A dropped receiver only means nobody is listening any more.
        let _ = sink.send(chunk.clone());
        text.push_str(&chunk);
    }
    Ok(text)
}

/// The persona's reply to `event`. With a sink the reply is streamed
/// chunk by chunk as well as returned whole.
pub async fn mentee_reply(
    chat: &dyn ChatProvider,
    kb: &KnowledgeBase,
    view: &SessionView<'_>,
    event: MenteeEvent,
    payload: &str,
    sink: Option<&ChunkSink>,
) -> Result<MenteeMessage, AgentError> {
    let request = LlmRequest {
        model_role: ModelRole::Chat,
        system_prompt: prompts::assemble_system_prompt(kb, AgentKind::MenteePersona),
        messages: vec![ChatMessage::user(mentee_task(view, event, payload))],
        response_schema: None,
        temperature: PERSONA_TEMPERATURE,
    };
    for _ in 0..=MAX_RETRIES {
        let text = collect(chat, &request, sink).await?;
        let text = text.trim();
        if !text.is_empty() {
            return Ok(MenteeMessage::new(text, event.stage_hint()));
        }
        tracing::debug!(event = event.as_str(), "empty mentee reply, retrying");
    }
    Err(AgentError::EmptyReply {
        attempts: MAX_RETRIES + 1,
    })
}

/// Principles the teachers shared in `round`. Earlier summaries of the
/// session are included as context.
pub async fn summarize_principles(
    chat: &dyn ChatProvider,
    kb: &KnowledgeBase,
    round: &Round,
    earlier_summaries: &[&str],
) -> Result<String, AgentError> {
    if round.ratings.is_empty() {
        return Err(AgentError::Precondition("round has no ratings".into()));
    }
    let Some(recording) = &round.recording else {
        return Err(AgentError::Precondition("round has no recording".into()));
    };
    let Some(explanation) = &round.explanation else {
        return Err(AgentError::Precondition("round has no explanation".into()));
    };
    let mut task = format!("Summarize this round.\n{}\n", round.scenario.render());
    for p in round.proposals.iter() {
        let _ = writeln!(
            task,
            "Gesture {} ({}, {}): {}",
            p.ordinal + 1,
            p.gesture_type,
            p.intention,
            p.description
        );
    }
    task.push_str(&feedback_payload(round, &round.ratings));
    let _ = writeln!(
        task,
        "{}: {:.1}",
        labels::AVERAGE_RATING,
        round.average_stars().unwrap_or_default()
    );
    task.push_str(&demonstration_payload(recording));
    task.push_str(&explanation_payload(explanation));
    if !earlier_summaries.is_empty() {
        task.push_str("Earlier rounds:\n");
        for s in earlier_summaries {
            let _ = writeln!(task, "- {}", one_line(s));
        }
    }
    let request = LlmRequest {
        model_role: ModelRole::Chat,
        system_prompt: prompts::summary_system_prompt(kb),
        messages: vec![ChatMessage::user(task)],
        response_schema: Some(SchemaId::Summary),
        temperature: PERSONA_TEMPERATURE,
    };
    match call_structured(chat, request).await? {
        StructuredValue::Summary(s) => Ok(s),
        other => unreachable!("summary schema produced {other:?}"),
    }
}
