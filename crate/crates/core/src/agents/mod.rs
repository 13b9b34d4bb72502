//! The three LLM agents: intention analysis, gesture generation with a
//! retrieved few-shot exemplar, and the mentee persona that talks to the
//! teachers.

pub mod mentee;
mod pipeline;
pub mod prompts;
pub mod structured;

use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{GestureTypeKey, IntentionKey};
use crate::llm::{ChatMessage, ChatProvider, LlmRequest, ProviderError, SchemaId};
use crate::retrieval::RetrievalError;
use crate::session::Stage;

pub use mentee::{mentee_reply, summarize_principles, ChunkSink, MenteeEvent, SessionView};
pub use pipeline::{analyze_intentions, generate_gesture_proposal, run_generation_pipeline};
pub use prompts::{assemble_system_prompt, AgentKind};
pub use structured::{parse_structured_output, IntentionFinding, MalformedOutput, StructuredValue, Violation};

/// Upper bound on gestures proposed for one scenario.
pub const MAX_PROPOSALS: usize = 4;

/// Extra attempts after a reply fails structured parsing.
pub const MAX_RETRIES: u32 = 2;

pub const ANALYSIS_TEMPERATURE: f32 = 0.0;
pub const PERSONA_TEMPERATURE: f32 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureProposal {
    pub ordinal: u32,
    pub description: String,
    pub intention: IntentionKey,
    pub gesture_type: GestureTypeKey,
    pub rationale: String,
    pub references: Vec<String>,
    pub few_shot_exemplar_id: Option<u32>,
}

/// Ordered proposals for one scenario; ordinals run `0..len`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProposalSet(Vec<GestureProposal>);

impl ProposalSet {
    pub fn new(proposals: Vec<GestureProposal>) -> Self {
        Self(proposals)
    }

    pub fn into_inner(self) -> Vec<GestureProposal> {
        self.0
    }
}

impl Deref for ProposalSet {
    type Target = [GestureProposal];

    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MenteeRole {
    Mentee,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MenteeMessage {
    pub role: MenteeRole,
    pub text: String,
    pub stage_hint: Stage,
}

impl MenteeMessage {
    pub fn new(text: impl Into<String>, stage_hint: Stage) -> Self {
        Self {
            role: MenteeRole::Mentee,
            text: text.into(),
            stage_hint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{output} (after {attempts} attempts)")]
    MalformedOutput { output: MalformedOutput, attempts: u32 },
    #[error("none of the {} findings needs a gesture", .findings.len())]
    NoGestureNeeded { findings: Vec<IntentionFinding> },
    #[error("mentee reply was empty after {attempts} attempts")]
    EmptyReply { attempts: u32 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Retrieval(RetrievalError),
}

impl AgentError {
    pub fn code(&self) -> &'static str {
        match self {
            AgentError::Provider(_) => "ProviderError",
            AgentError::MalformedOutput { .. } | AgentError::EmptyReply { .. } => "MalformedOutput",
            AgentError::NoGestureNeeded { .. } => "NoGestureNeeded",
            AgentError::Precondition(_) => "PreconditionViolation",
            AgentError::Retrieval(RetrievalError::Provider(_)) => "ProviderError",
            AgentError::Retrieval(e) => e.code(),
        }
    }
}

impl From<RetrievalError> for AgentError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Provider(p) => AgentError::Provider(p),
            other => AgentError::Retrieval(other),
        }
    }
}

/// Sends `request`, parsing the reply against its schema. A rejected reply
/// is answered with the violation and retried up to [`MAX_RETRIES`] times.
pub(crate) async fn call_structured(
    chat: &dyn ChatProvider,
    mut request: LlmRequest,
) -> Result<StructuredValue, AgentError> {
    let schema: SchemaId = request
        .response_schema
        .expect("structured call requires a response schema");
    let mut attempt = 0;
    loop {
        let response = chat.complete(&request).await?;
        match parse_structured_output(&response.raw_text, schema) {
            Ok(value) => return Ok(value),
            Err(output) if attempt >= MAX_RETRIES => {
                tracing::warn!(%schema, attempts = attempt + 1, "giving up on malformed output");
                return Err(AgentError::MalformedOutput {
                    output,
                    attempts: attempt + 1,
                });
            }
            Err(output) => {
                tracing::debug!(%schema, violation = %output.violation, "retrying malformed output");
                request.messages.push(ChatMessage::assistant(response.raw_text));
                request
                    .messages
                    .push(ChatMessage::user(prompts::retry_message(&output.violation.to_string())));
                attempt += 1;
            }
        }
    }
}
