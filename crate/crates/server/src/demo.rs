//! One scripted round against an in-process stub server, driven only
//! through the HTTP API.

use std::fmt::Write;

use novobo_core::session::{Session, SkeletalRecording};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::service::{serve, ServeError};

#[derive(Debug, Error)]
pub enum DemoError {
    #[error(transparent)]
    Serve(#[from] ServeError),
    #[error("request failed: {0}")]
    Http(#[from] reqwest::Error),
    #[error("{step}: HTTP {status}: {body}")]
    Status { step: &'static str, status: u16, body: String },
    #[error("unexpected response: {0}")]
    Unexpected(String),
    #[error("temporary data directory: {0}")]
    Io(#[from] std::io::Error),
}

const COMMENTS: [&str; 4] = [
    "Clear and easy to copy. Slow it down so younger students can follow.",
    "Good idea, but make the movement bigger so the back row can see it.",
    "This feels forced here. A simple point at the board would do.",
    "Nice, and pair it with eye contact for the whole class.",
];

const EXPLANATION: &str = "I held both hands high and let them drift down in small side-to-side swings while saying the sentence. \
The slow swaying shows how leaves float rather than drop, so students picture the motion before we discuss why it happens.";

struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    async fn call(&self, step: &'static str, method: reqwest::Method, path: &str, body: Option<Value>) -> Result<Value, DemoError> {
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().await?;
        let status = resp.status();
        let text = resp.text().await?;
        if !status.is_success() {
            return Err(DemoError::Status {
                step,
                status: status.as_u16(),
                body: text,
            });
        }
        serde_json::from_str(&text).map_err(|e| DemoError::Unexpected(format!("{step}: {e}")))
    }
}

fn text(v: &Value, field: &str) -> Result<String, DemoError> {
    v[field]
        .as_str()
        .map(str::to_string)
        .ok_or_else(|| DemoError::Unexpected(format!("missing `{field}` in {v}")))
}

fn mentee(out: &mut String, v: &Value) -> Result<(), DemoError> {
    let m = &v["message"];
    writeln!(out, "novobo [{}]: {}", text(m, "stage_hint")?, text(m, "text")?).ok();
    Ok(())
}

/// Runs the demo round and returns its transcript. Session ids and
/// timestamps are left out so the transcript depends only on `seed`.
pub async fn run_demo(seed: u64) -> Result<String, DemoError> {
    let data = tempfile::tempdir()?;
    let handle = serve(EngineConfig::stub(data.path(), seed)).await?;
    let client = Client {
        http: reqwest::Client::new(),
        base: handle.base_url(),
    };
    let result = drive(&client, seed).await;
    handle.shutdown().await?;
    result
}

async fn drive(c: &Client, seed: u64) -> Result<String, DemoError> {
    use reqwest::Method;
    let mut out = String::new();
    writeln!(out, "novobo demo, stub seed {seed}").ok();

    let health = c.call("health", Method::GET, "/healthz", None).await?;
    writeln!(
        out,
        "service: mode {}, {} gesture types, {} intentions, {} exemplars",
        text(&health, "mode")?,
        health["gesture_types"],
        health["intentions"],
        health["exemplars"]
    )
    .ok();

    let created = c.call("create session", Method::POST, "/sessions", Some(json!({"group_label": "demo"}))).await?;
    let id = text(&created, "id")?;
    writeln!(out, "\n== posing_question ==").ok();

    let catalog = c.call("scenarios", Method::GET, "/scenarios", None).await?;
    let first = &catalog["scenarios"][0];
    let catalog_id = text(first, "id")?;
    writeln!(
        out,
        "teachers: [{catalog_id}] {} / {} / {}: {}",
        text(first, "subject")?,
        text(first, "grade_level")?,
        text(first, "lesson_topic")?,
        text(first, "scenario_text")?
    )
    .ok();
    let posed = c
        .call("scenario", Method::POST, &format!("/sessions/{id}/scenario"), Some(json!({"catalog_id": catalog_id})))
        .await?;
    let proposals = posed["proposals"]
        .as_array()
        .cloned()
        .ok_or_else(|| DemoError::Unexpected("no proposals".into()))?;
    if proposals.is_empty() {
        return Err(DemoError::Unexpected("stub produced no proposals".into()));
    }

    writeln!(out, "\n== commentary ==").ok();
    mentee(&mut out, &posed)?;
    for p in &proposals {
        let refs: Vec<&str> = p["references"]
            .as_array()
            .map(|a| a.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        writeln!(
            out,
            "proposal {}: {} gesture for {}\n  {}\n  example: {}\n  references: {}",
            p["ordinal"].as_u64().unwrap_or_default() + 1,
            text(p, "gesture_type")?,
            text(p, "intention")?,
            text(p, "description")?,
            p["few_shot_exemplar_id"],
            refs.join(", ")
        )
        .ok();
    }
    let ratings: Vec<Value> = proposals
        .iter()
        .enumerate()
        .map(|(i, p)| {
            json!({
                "proposal_ordinal": p["ordinal"],
                "stars": 5 - (i % 4) as u8,
                "comment": COMMENTS[i % COMMENTS.len()],
            })
        })
        .collect();
    for r in &ratings {
        writeln!(
            out,
            "teachers: proposal {} gets {} stars: {}",
            r["proposal_ordinal"].as_u64().unwrap_or_default() + 1,
            r["stars"],
            text(r, "comment")?
        )
        .ok();
    }
    let rated = c
        .call("ratings", Method::POST, &format!("/sessions/{id}/ratings"), Some(json!({"ratings": ratings})))
        .await?;
    mentee(&mut out, &rated)?;

    writeln!(out, "\n== demonstration ==").ok();
    let recording = SkeletalRecording::synthetic_wave(60, 30);
    writeln!(
        out,
        "teachers: recorded {} frames of {} at {} fps ({} ms)",
        recording.frames.len(),
        recording.joint_set,
        recording.fps_nominal,
        recording.duration_ms()
    )
    .ok();
    let demo = c
        .call(
            "demonstration",
            Method::POST,
            &format!("/sessions/{id}/demonstration"),
            Some(serde_json::to_value(&recording).expect("recording serializes")),
        )
        .await?;
    mentee(&mut out, &demo)?;

    writeln!(out, "\n== explanation ==").ok();
    writeln!(out, "teachers: {EXPLANATION}").ok();
    let explained = c
        .call("explanation", Method::POST, &format!("/sessions/{id}/explanation"), Some(json!({"text": EXPLANATION})))
        .await?;
    writeln!(out, "summary: {}", text(&explained, "summary")?).ok();
    mentee(&mut out, &explained)?;

    let doc = c.call("session", Method::GET, &format!("/sessions/{id}"), None).await?;
    let session = Session::import(&doc.to_string()).map_err(|e| DemoError::Unexpected(e.to_string()))?;
    let again = Session::import(&session.export()).map_err(|e| DemoError::Unexpected(e.to_string()))?;
    let round_trip = again == session && serde_json::to_value(&again).ok() == Some(doc);
    writeln!(
        out,
        "\nfinal: stage {}, {} round(s), round complete: {}, export/import round trip: {}",
        session.stage,
        session.rounds.len(),
        session.rounds.last().is_some_and(|r| r.is_complete()),
        if round_trip { "ok" } else { "MISMATCH" }
    )
    .ok();
    if !round_trip {
        return Err(DemoError::Unexpected("session did not survive export/import".into()));
    }
    Ok(out)
}
