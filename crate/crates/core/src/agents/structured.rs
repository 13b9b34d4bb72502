//! Strict parsing of model replies against the named output schemas.
//!
//! Replies are JSON documents. A surrounding Markdown code fence is
//! tolerated; unknown fields and values outside the taxonomy are not.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{GestureTypeKey, IntentionKey};
use crate::llm::SchemaId;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[serde(tag = "violation", content = "detail", rename_all = "snake_case")]
pub enum Violation {
    #[error("NotJson: {0}")]
    NotJson(String),
    #[error("SchemaMismatch: {0}")]
    SchemaMismatch(String),
    #[error("UnknownIntention: `{0}` is not one of explain_complex, attract_attention, positive_feedback, impart_new_knowledge, role_modeling")]
    UnknownIntention(String),
    #[error("UnknownGestureType: `{0}` is not one of iconic, metaphoric, deictic, emblematic")]
    UnknownGestureType(String),
    #[error("EmptyField: `{0}` must not be empty")]
    EmptyField(String),
    #[error("NoFindings: at least one finding is required")]
    NoFindings,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Error)]
#[error("malformed {schema} output: {violation}")]
pub struct MalformedOutput {
    pub schema: SchemaId,
    pub violation: Violation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntentionFinding {
    pub intention: IntentionKey,
    pub needs_gesture: bool,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GestureDraft {
    pub gesture_type: GestureTypeKey,
    pub description: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StructuredValue {
    Findings(Vec<IntentionFinding>),
    Gesture(GestureDraft),
    Summary(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFindings {
    #[serde(default)]
    #[allow(dead_code)]
    analysis: Option<String>,
    findings: Vec<RawFinding>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFinding {
    intention: String,
    needs_gesture: bool,
    rationale: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGesture {
    #[serde(default)]
    #[allow(dead_code)]
    analysis: Option<String>,
    gesture_type: String,
    description: String,
    rationale: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSummary {
    summary: String,
}

fn strip_fence(raw: &str) -> &str {
    let t = raw.trim();
    let Some(rest) = t.strip_prefix("```") else {
        return t;
    };
    let rest = rest.strip_prefix("json").unwrap_or(rest);
    rest.strip_suffix("```").unwrap_or(rest).trim()
}

fn decode<T: DeserializeOwned>(raw: &str) -> Result<T, Violation> {
    let body = strip_fence(raw);
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| Violation::NotJson(e.to_string()))?;
    serde_json::from_value(value).map_err(|e| Violation::SchemaMismatch(e.to_string()))
}

fn non_empty(field: &str, value: String) -> Result<String, Violation> {
    if value.trim().is_empty() {
        Err(Violation::EmptyField(field.to_string()))
    } else {
        Ok(value.trim().to_string())
    }
}

fn parse_findings(raw: &str) -> Result<Vec<IntentionFinding>, Violation> {
    let doc: RawFindings = decode(raw)?;
    if doc.findings.is_empty() {
        return Err(Violation::NoFindings);
    }
    doc.findings
        .into_iter()
        .map(|f| {
            let intention = f
                .intention
                .parse::<IntentionKey>()
                .map_err(|_| Violation::UnknownIntention(f.intention.clone()))?;
            Ok(IntentionFinding {
                intention,
                needs_gesture: f.needs_gesture,
                rationale: non_empty("rationale", f.rationale)?,
            })
        })
        .collect()
}

fn parse_gesture(raw: &str) -> Result<GestureDraft, Violation> {
    let doc: RawGesture = decode(raw)?;
    let gesture_type = doc
        .gesture_type
        .parse::<GestureTypeKey>()
        .map_err(|_| Violation::UnknownGestureType(doc.gesture_type.clone()))?;
    Ok(GestureDraft {
        gesture_type,
        description: non_empty("description", doc.description)?,
        rationale: non_empty("rationale", doc.rationale)?,
    })
}

fn parse_summary(raw: &str) -> Result<String, Violation> {
    let doc: RawSummary = decode(raw)?;
    non_empty("summary", doc.summary)
}

pub fn parse_structured_output(raw: &str, schema: SchemaId) -> Result<StructuredValue, MalformedOutput> {
    let parsed = match schema {
        SchemaId::IntentionFindings => parse_findings(raw).map(StructuredValue::Findings),
        SchemaId::GestureProposal => parse_gesture(raw).map(StructuredValue::Gesture),
        SchemaId::Summary => parse_summary(raw).map(StructuredValue::Summary),
    };
    parsed.map_err(|violation| MalformedOutput { schema, violation })
}

/// The JSON shape each schema expects, quoted in system prompts.
pub fn schema_hint(schema: SchemaId) -> &'static str {
    match schema {
        SchemaId::IntentionFindings => {
            r#"{"analysis": "<your step-by-step reasoning>", "findings": [{"intention": "<intention key>", "needs_gesture": true, "rationale": "<why>"}]}"#
        }
        SchemaId::GestureProposal => {
            r#"{"analysis": "<your step-by-step reasoning>", "gesture_type": "<gesture type key>", "description": "<what the teacher's hands and body do>", "rationale": "<why this gesture serves the intention>"}"#
        }
        SchemaId::Summary => r#"{"summary": "<what you learned from the teachers this round>"}"#,
    }
}
