//! Clients for OpenAI-compatible chat-completion and embedding endpoints.

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{
    ChatProvider, LlmRequest, LlmResponse, ModelRole, ProviderError, ProviderErrorKind, Speaker,
    TextStream, Usage,
};
use crate::retrieval::Embedder;

/// Model identifier per role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleModels {
    pub reasoning: String,
    pub chat: String,
}

impl RoleModels {
    pub fn for_role(&self, role: ModelRole) -> &str {
        match role {
            ModelRole::Reasoning => &self.reasoning,
            ModelRole::Chat => &self.chat,
        }
    }
}

fn join(endpoint: &str, path: &str) -> String {
    format!("{}/{}", endpoint.trim_end_matches('/'), path)
}

fn map_send_error(e: reqwest::Error) -> ProviderError {
    if e.is_timeout() {
        ProviderError::new(ProviderErrorKind::Timeout, e.to_string())
    } else {
        ProviderError::new(ProviderErrorKind::Network, e.to_string())
    }
}

fn map_status(status: reqwest::StatusCode, body: &str) -> ProviderError {
    let message = format!("HTTP {status}: {}", body.chars().take(300).collect::<String>());
    match status.as_u16() {
        401 | 403 => ProviderError::new(ProviderErrorKind::Auth, message),
        429 => ProviderError::new(ProviderErrorKind::RateLimited, message),
        400 | 404 | 422 => ProviderError::new(ProviderErrorKind::InvalidRequest, message),
        s if s >= 500 => ProviderError::new(ProviderErrorKind::Status, message).with_retryable(true),
        _ => ProviderError::new(ProviderErrorKind::Status, message),
    }
}

fn protocol(message: impl Into<String>) -> ProviderError {
    ProviderError::new(ProviderErrorKind::Protocol, message)
}

async fn post_json(
    client: &reqwest::Client,
    url: &str,
    api_key: &str,
    body: &Value,
) -> Result<reqwest::Response, ProviderError> {
    let response = client
        .post(url)
        .bearer_auth(api_key)
        .json(body)
        .send()
        .await
        .map_err(map_send_error)?;
    let status = response.status();
    if !status.is_success() {
        let text = response.text().await.unwrap_or_default();
        return Err(map_status(status, &text));
    }
    Ok(response)
}

pub struct OpenAiCompatChat {
    client: reqwest::Client,
    endpoint: String,
    api_key: String,
    models: RoleModels,
}

impl OpenAiCompatChat {
    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>, models: RoleModels) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            models,
        }
    }

    fn body(&self, request: &LlmRequest, stream: bool) -> Value {
        let mut messages = vec![json!({"role": "system", "content": request.system_prompt})];
        messages.extend(request.messages.iter().map(|m| {
            let role = match m.speaker {
                Speaker::User => "user",
                Speaker::Assistant => "assistant",
            };
            json!({"role": role, "content": m.text})
        }));
        let mut body = json!({
            "model": self.models.for_role(request.model_role),
            "messages": messages,
            "temperature": request.temperature,
            "stream": stream,
        });
        if request.response_schema.is_some() {
            body["response_format"] = json!({"type": "json_object"});
        }
        body
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<CompletionUsage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct CompletionUsage {
    #[serde(default)]
    prompt_tokens: u32,
    #[serde(default)]
    completion_tokens: u32,
}

/// Pulls `data:` payloads out of a server-sent-events buffer, leaving any
/// incomplete trailing line in place.
fn drain_sse_data(buffer: &mut String) -> Vec<String> {
    let mut out = Vec::new();
    while let Some(pos) = buffer.find('\n') {
        let line: String = buffer.drain(..=pos).collect();
        if let Some(data) = line.trim_end().strip_prefix("data:") {
            out.push(data.trim().to_string());
        }
    }
    out
}

fn delta_text(data: &str) -> Result<Option<String>, ProviderError> {
    if data == "[DONE]" {
        return Ok(None);
    }
    let v: Value = serde_json::from_str(data).map_err(|e| protocol(e.to_string()))?;
    Ok(Some(
        v["choices"][0]["delta"]["content"]
            .as_str()
            .unwrap_or_default()
            .to_string(),
    ))
}

#[async_trait]
impl ChatProvider for OpenAiCompatChat {
    async fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, ProviderError> {
        let url = join(&self.endpoint, "chat/completions");
        let response = post_json(&self.client, &url, &self.api_key, &self.body(request, false)).await?;
        let completion: Completion = response
            .json()
            .await
            .map_err(|e| protocol(format!("unreadable completion: {e}")))?;
        let raw_text = completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| protocol("completion without content"))?;
        let usage = completion
            .usage
            .map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            })
            .unwrap_or_default();
        Ok(LlmResponse { raw_text, usage })
    }

    async fn stream(&self, request: &LlmRequest) -> Result<TextStream, ProviderError> {
        let url = join(&self.endpoint, "chat/completions");
        let response = post_json(&self.client, &url, &self.api_key, &self.body(request, true)).await?;
        let bytes = response.bytes_stream();
        let chunks = stream::unfold(
            (bytes, String::new(), Vec::<String>::new(), false),
            |(mut bytes, mut buffer, mut pending, mut done)| async move {
                loop {
                    if let Some(data) = pending.pop() {
                        match delta_text(&data) {
                            Ok(Some(text)) if text.is_empty() => continue,
                            Ok(Some(text)) => return Some((Ok(text), (bytes, buffer, pending, done))),
                            Ok(None) => {
                                done = true;
                                pending.clear();
                                continue;
                            }
                            Err(e) => return Some((Err(e), (bytes, buffer, Vec::new(), true))),
                        }
                    }
                    if done {
                        return None;
                    }
                    match bytes.next().await {
                        Some(Ok(b)) => {
                            buffer.push_str(&String::from_utf8_lossy(&b));
                            let mut fresh = drain_sse_data(&mut buffer);
                            fresh.reverse();
                            pending = fresh;
                        }
                        Some(Err(e)) => {
                            return Some((Err(map_send_error(e)), (bytes, buffer, pending, true)))
                        }
                        None => return None,
                    }
                }
            },
        );
        Ok(chunks.boxed())
    }
}

pub struct OpenAiCompatEmbedder {
    client: reqwest::Client,
    endpoint: String,
    api_key: String,
    model: String,
    dim: usize,
}

impl OpenAiCompatEmbedder {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: impl Into<String>,
        model: impl Into<String>,
        dim: usize,
    ) -> Self {
        Self {
            client: reqwest::Client::new(),
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            model: model.into(),
            dim,
        }
    }
}

#[async_trait]
impl Embedder for OpenAiCompatEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let url = join(&self.endpoint, "embeddings");
        let body = json!({"model": self.model, "input": text, "dimensions": self.dim});
        let response = post_json(&self.client, &url, &self.api_key, &body).await?;
        let v: Value = response
            .json()
            .await
            .map_err(|e| protocol(format!("unreadable embedding: {e}")))?;
        v["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| protocol("response without data[0].embedding"))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| protocol("non-numeric embedding component")))
            .collect()
    }
}
