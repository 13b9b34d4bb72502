//! Provider-neutral chat exchange.
//!
//! Agents talk to a [`ChatProvider`] with an [`LlmRequest`] that names a
//! [`ModelRole`] instead of a concrete model; the provider maps roles to
//! configured model identifiers.

mod bounded;
pub mod http;
pub mod stub;

use std::fmt;

use async_trait::async_trait;
use futures::stream::{self, BoxStream, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bounded::{Bounded, BoundedEmbedder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelRole {
    /// Analytically stronger model used for intention analysis and generation.
    Reasoning,
    /// Fast conversational model used for the mentee persona.
    Chat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub speaker: Speaker,
    pub text: String,
}

impl ChatMessage {
    pub fn user(text: impl Into<String>) -> Self {
        Self {
            speaker: Speaker::User,
            text: text.into(),
        }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Self {
            speaker: Speaker::Assistant,
            text: text.into(),
        }
    }
}

/// Structured-output contracts an agent may demand from the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    IntentionFindings,
    GestureProposal,
    Summary,
}

impl SchemaId {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::IntentionFindings => "intention_findings",
            SchemaId::GestureProposal => "gesture_proposal",
            SchemaId::Summary => "summary",
        }
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model_role: ModelRole,
    pub system_prompt: String,
    pub messages: Vec<ChatMessage>,
    pub response_schema: Option<SchemaId>,
    pub temperature: f32,
}

impl LlmRequest {
    pub fn last_user_text(&self) -> &str {
        self.messages
            .iter()
            .rev()
            .find(|m| m.speaker == Speaker::User)
            .map(|m| m.text.as_str())
            .unwrap_or("")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u32,
    pub completion_tokens: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmResponse {
    pub raw_text: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Network,
    Auth,
    Timeout,
    RateLimited,
    Status,
    Protocol,
    InvalidRequest,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("provider {kind:?} error: {message}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub message: String,
    pub retryable: bool,
}

impl ProviderError {
    pub fn new(kind: ProviderErrorKind, message: impl Into<String>) -> Self {
        let retryable = matches!(
            kind,
            ProviderErrorKind::Network | ProviderErrorKind::Timeout | ProviderErrorKind::RateLimited
        );
        Self {
            kind,
            message: message.into(),
            retryable,
        }
    }

    pub fn with_retryable(mut self, retryable: bool) -> Self {
        self.retryable = retryable;
        self
    }
}

pub type TextStream = BoxStream<'static, Result<String, ProviderError>>;

#[async_trait]
pub trait ChatProvider: Send + Sync {
    async fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, ProviderError>;

    /// Incremental variant. The concatenated chunks equal the text that
    /// [`ChatProvider::complete`] would return for the same request.
    async fn stream(&self, request: &LlmRequest) -> Result<TextStream, ProviderError> {
        let response = self.complete(request).await?;
        Ok(stream::iter(vec![Ok(response.raw_text)]).boxed())
    }
}

#[async_trait]
impl<T: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<T> {
    async fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, ProviderError> {
        (**self).complete(request).await
    }

    async fn stream(&self, request: &LlmRequest) -> Result<TextStream, ProviderError> {
        (**self).stream(request).await
    }
}

/// Splits text into word-sized chunks whose concatenation is the input.
pub fn word_chunks(text: &str) -> Vec<String> {
    text.split_inclusive(' ').map(str::to_string).collect()
}
