//! Scripted, seeded fake provider.
//!
//! Each request is attributed to an agent by its response schema. A reply
//! is chosen in this order: the next scripted reply queued for that agent,
//! the first matching rule, then a default reply computed from
//! `(seed, request)`. Every request is logged for inspection.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde_json::json;

use super::{
    word_chunks, ChatProvider, LlmRequest, LlmResponse, ModelRole, ProviderError, SchemaId,
    TextStream, Usage,
};
use crate::agents::prompts::labels;
use crate::hashing::stable_hash;
use crate::knowledge::{GestureTypeKey, IntentionKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StubAgent {
    Analyzer,
    Generator,
    Summarizer,
    Mentee,
}

impl StubAgent {
    pub fn of(request: &LlmRequest) -> Self {
        match request.response_schema {
            Some(SchemaId::IntentionFindings) => StubAgent::Analyzer,
            Some(SchemaId::GestureProposal) => StubAgent::Generator,
            Some(SchemaId::Summary) => StubAgent::Summarizer,
            None => StubAgent::Mentee,
        }
    }

    fn tag(self) -> &'static [u8] {
        match self {
            StubAgent::Analyzer => b"analyzer",
            StubAgent::Generator => b"generator",
            StubAgent::Summarizer => b"summarizer",
            StubAgent::Mentee => b"mentee",
        }
    }
}

#[derive(Debug, Clone)]
enum Reply {
    Text(String),
    Fail(ProviderError),
}

#[derive(Debug, Clone)]
struct Rule {
    agent: StubAgent,
    needle: String,
    reply: String,
}

#[derive(Default)]
struct StubState {
    queues: HashMap<StubAgent, VecDeque<Reply>>,
    rules: Vec<Rule>,
    log: Vec<LlmRequest>,
}

pub struct StubChat {
    seed: u64,
    state: Mutex<StubState>,
}

impl StubChat {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            state: Mutex::new(StubState::default()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Queues a one-shot reply for the next request from `agent`.
    pub fn script(&self, agent: StubAgent, reply: impl Into<String>) -> &Self {
        self.lock()
            .queues
            .entry(agent)
            .or_default()
            .push_back(Reply::Text(reply.into()));
        self
    }

    /// Queues a one-shot provider failure for the next request from `agent`.
    pub fn script_failure(&self, agent: StubAgent, error: ProviderError) -> &Self {
        self.lock()
            .queues
            .entry(agent)
            .or_default()
            .push_back(Reply::Fail(error));
        self
    }

    /// Persistent reply for requests whose first user message contains `needle`.
    pub fn with_rule(self, agent: StubAgent, needle: impl Into<String>, reply: impl Into<String>) -> Self {
        self.lock().rules.push(Rule {
            agent,
            needle: needle.into(),
            reply: reply.into(),
        });
        self
    }

    pub fn requests(&self) -> Vec<LlmRequest> {
        self.lock().log.clone()
    }

    pub fn call_count(&self, agent: StubAgent) -> usize {
        self.lock()
            .log
            .iter()
            .filter(|r| StubAgent::of(r) == agent)
            .count()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, StubState> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn respond(&self, request: &LlmRequest) -> Result<String, ProviderError> {
        let agent = StubAgent::of(request);
        let task = first_user_text(request);
        let mut state = self.lock();
        state.log.push(request.clone());
        if let Some(reply) = state.queues.get_mut(&agent).and_then(VecDeque::pop_front) {
            return match reply {
                Reply::Text(t) => Ok(t),
                Reply::Fail(e) => Err(e),
            };
        }
        if let Some(rule) = state
            .rules
            .iter()
            .find(|r| r.agent == agent && task.contains(&r.needle))
        {
            return Ok(rule.reply.clone());
        }
        drop(state);
        Ok(match agent {
            StubAgent::Analyzer => default_findings(self.seed, task),
            StubAgent::Generator => default_gesture(self.seed, task),
            StubAgent::Summarizer => default_summary(self.seed, task),
            StubAgent::Mentee => default_mentee(self.seed, task),
        })
    }
}

#[async_trait]
impl ChatProvider for StubChat {
    async fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, ProviderError> {
        let text = self.respond(request)?;
        let usage = Usage {
            prompt_tokens: approx_tokens(&request.system_prompt)
                + request.messages.iter().map(|m| approx_tokens(&m.text)).sum::<u32>(),
            completion_tokens: approx_tokens(&text),
        };
        Ok(LlmResponse {
            raw_text: text,
            usage,
        })
    }

    async fn stream(&self, request: &LlmRequest) -> Result<TextStream, ProviderError> {
        let text = self.respond(request)?;
        Ok(stream::iter(word_chunks(&text).into_iter().map(Ok)).boxed())
    }
}

/// Stub model identifier reported for each role.
pub fn stub_model(role: ModelRole) -> &'static str {
    match role {
        ModelRole::Reasoning => "stub-reasoning",
        ModelRole::Chat => "stub-chat",
    }
}

fn approx_tokens(text: &str) -> u32 {
    text.split_whitespace().count() as u32
}

fn first_user_text(request: &LlmRequest) -> &str {
    request
        .messages
        .iter()
        .find(|m| m.speaker == super::Speaker::User)
        .map(|m| m.text.as_str())
        .unwrap_or("")
}

fn field<'a>(text: &'a str, label: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(label).and_then(|rest| rest.strip_prefix(": ")))
        .map(str::trim)
}

fn bullets_after<'a>(text: &'a str, header: &str) -> Vec<&'a str> {
    text.lines()
        .skip_while(|l| l.trim() != header)
        .skip(1)
        .take_while(|l| l.starts_with("- "))
        .map(|l| l[2..].trim())
        .collect()
}

fn snippet(text: &str, words: usize) -> String {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let out = parts[..parts.len().min(words)].join(" ");
    let mut out = out.trim_end_matches(['.', ',', ';', ':']).to_string();
    if parts.len() > words {
        out.push_str("...");
    }
    out
}

fn hash(seed: u64, agent: StubAgent, parts: &[&str]) -> u64 {
    let seed = seed.to_le_bytes();
    let mut all: Vec<&[u8]> = vec![agent.tag(), &seed];
    all.extend(parts.iter().map(|p| p.as_bytes()));
    stable_hash(&all)
}

fn default_findings(seed: u64, task: &str) -> String {
    let scenario = field(task, labels::SCENARIO).unwrap_or(task);
    let h = hash(seed, StubAgent::Analyzer, &[scenario]);
    let count = 1 + (h % 3) as usize;
    let start = ((h >> 8) % 5) as usize;
    let step = 1 + ((h >> 16) % 4) as usize;
    let quoted = snippet(scenario, 8);
    let findings: Vec<_> = (0..count)
        .map(|i| {
            let intention = IntentionKey::ALL[(start + i * step) % 5];
            let needs_gesture = i == 0 || (h >> (24 + i)) & 1 == 1;
            json!({
                "intention": intention.as_str(),
                "needs_gesture": needs_gesture,
                "rationale": format!(
                    "In \"{quoted}\" the teacher may be {}.",
                    intention.label().to_lowercase()
                ),
            })
        })
        .collect();
    json!({
        "analysis": format!(
            "Step 1: read the scenario \"{quoted}\". Step 2: match it against the intentions. Step 3: decide which ones a gesture would serve."
        ),
        "findings": findings,
    })
    .to_string()
}

fn default_gesture(seed: u64, task: &str) -> String {
    use GestureTypeKey::*;
    let scenario = field(task, labels::SCENARIO).unwrap_or(task);
    let intention = field(task, labels::INTENTION)
        .and_then(|k| k.parse::<IntentionKey>().ok())
        .unwrap_or(IntentionKey::ExplainComplex);
    let h = hash(seed, StubAgent::Generator, &[scenario, intention.as_str()]);
    let candidates: &[GestureTypeKey] = match intention {
        IntentionKey::ExplainComplex => &[Iconic, Metaphoric],
        IntentionKey::AttractAttention => &[Deictic, Emblematic],
        IntentionKey::PositiveFeedback => &[Emblematic],
        IntentionKey::ImpartNewKnowledge => &[Metaphoric, Iconic, Deictic],
        IntentionKey::RoleModeling => &[Iconic, Emblematic],
    };
    let gesture_type = candidates[(h % candidates.len() as u64) as usize];
    let quoted = snippet(scenario, 8);
    let mut description = match gesture_type {
        Iconic => format!(
            "Trace the shape and motion described in \"{quoted}\" with both hands, moving slowly enough for students to follow each part."
        ),
        Metaphoric => format!(
            "Hold cupped hands together in front of the chest, then open and spread them apart while saying \"{quoted}\" to show the idea taking shape."
        ),
        Deictic => format!(
            "Point with an open palm toward the board or object tied to \"{quoted}\", pausing until every student is looking."
        ),
        Emblematic => format!(
            "Make a familiar classroom sign such as a thumbs-up or raised open palm while saying \"{quoted}\", holding it for a moment."
        ),
    };
    if field(task, labels::EXAMPLE_GESTURE).is_some() {
        description.push_str(" This adapts a similar classroom example.");
    }
    json!({
        "analysis": format!(
            "Step 1: the intention is {}. Step 2: a {} gesture suits it. Step 3: describe the movement.",
            intention.label().to_lowercase(),
            gesture_type.label().to_lowercase()
        ),
        "gesture_type": gesture_type.as_str(),
        "description": description,
        "rationale": format!("{} supports {}.", gesture_type.label(), intention.label().to_lowercase()),
    })
    .to_string()
}

fn default_summary(seed: u64, task: &str) -> String {
    let explanation = field(task, labels::EXPLANATION).unwrap_or("your demonstration");
    let average = field(task, labels::AVERAGE_RATING).unwrap_or("n/a");
    let h = hash(seed, StubAgent::Summarizer, &[explanation]);
    let lead = ["What I learned this round", "My notes from this round"][(h % 2) as usize];
    json!({
        "summary": format!(
            "{lead}: {}. Your ratings (average {average} stars) showed me which of my ideas fit the scenario, and your demonstration showed me how to perform the gesture naturally.",
            snippet(explanation, 30)
        )
    })
    .to_string()
}

fn default_mentee(seed: u64, task: &str) -> String {
    let event = field(task, labels::EVENT).unwrap_or("stage_entered");
    let stage = field(task, labels::STAGE).unwrap_or("posing_question");
    let h = hash(seed, StubAgent::Mentee, &[event, stage]);
    let pick = |options: &[&'static str]| options[(h % options.len() as u64) as usize];
    match (event, stage) {
        ("stage_entered", "commentary") => {
            let n = field(task, labels::PROPOSAL_COUNT).unwrap_or("a few");
            format!(
                "{} I came up with {n} gesture ideas from what I have read. Could you rate each one with stars and tell me what works and what does not?",
                pick(&["Thank you for the scenario!", "What an interesting scenario!"])
            )
        }
        ("stage_entered", "demonstration") => {
            "Could you show me a gesture you would use here? Press practice to warm up, and record when you are ready.".to_string()
        }
        ("stage_entered", "explanation") => {
            "Please describe the gesture you demonstrated and explain why you would use it in this scenario.".to_string()
        }
        ("stage_entered", _) => {
            if let Some(reason) = field(task, labels::NOTE) {
                format!("I thought about this scenario, but {reason} Could you pose another scenario for me?")
            } else {
                "I am a novice teacher who knows the theory but has little classroom practice. Could you pose a teaching scenario for me?".to_string()
            }
        }
        ("ratings_submitted", _) => {
            let comments = bullets_after(task, labels::FEEDBACK);
            let heard = comments
                .first()
                .map(|c| format!(" I noted your comment: {}.", c.trim_end_matches(['.', '!', '?'])))
                .unwrap_or_default();
            format!(
                "{}{heard} Could you now demonstrate a gesture you would use for this scenario?",
                pick(&["Thank you for the feedback, I learned a lot from it.", "Thank you, your ratings help me see what fits a real classroom."])
            )
        }
        ("demonstration_attached", _) => {
            "Thank you for the demonstration, I watched it closely. Please describe the gesture and explain why you chose it.".to_string()
        }
        ("explanation_submitted", _) => {
            "Thank you for explaining your gesture! I have summarized what I learned from you below.".to_string()
        }
        _ => "Thank you! Let us continue.".to_string(),
    }
}
