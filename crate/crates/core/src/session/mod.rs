//! Mentoring sessions: the four-stage cycle and the rounds it produces.
//!
//! Stage transitions run `PosingQuestion -> Commentary -> Demonstration ->
//! Explanation -> PosingQuestion`. The operations that drive them live on
//! [`crate::engine::Engine`]; this module owns the data, its invariants,
//! and the document format.

pub mod recording;
pub mod store;

use std::collections::BTreeSet;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, GestureProposal, MenteeMessage, ProposalSet, MAX_PROPOSALS};
use crate::scenario::{ScenarioError, TeachingScenario};
pub use recording::{Frame, Joint, RecordingViolation, SkeletalRecording, BODY13};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    PosingQuestion,
    Commentary,
    Demonstration,
    Explanation,
}

impl Stage {
    pub const ALL: [Stage; 4] = [
        Stage::PosingQuestion,
        Stage::Commentary,
        Stage::Demonstration,
        Stage::Explanation,
    ];

    pub fn next(self) -> Stage {
        match self {
            Stage::PosingQuestion => Stage::Commentary,
            Stage::Commentary => Stage::Demonstration,
            Stage::Demonstration => Stage::Explanation,
            Stage::Explanation => Stage::PosingQuestion,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::PosingQuestion => "posing_question",
            Stage::Commentary => "commentary",
            Stage::Demonstration => "demonstration",
            Stage::Explanation => "explanation",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rating {
    pub proposal_ordinal: u32,
    pub stars: u8,
    pub comment: String,
}

pub const MIN_STARS: u8 = 1;
pub const MAX_STARS: u8 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Round {
    pub index: u32,
    pub scenario: TeachingScenario,
    pub proposals: ProposalSet,
    #[serde(default)]
    pub mentee_messages: Vec<MenteeMessage>,
    #[serde(default)]
    pub ratings: Vec<Rating>,
    #[serde(default)]
    pub recording: Option<SkeletalRecording>,
    #[serde(default)]
    pub explanation: Option<String>,
    #[serde(default)]
    pub summary: Option<String>,
}

impl Round {
    pub fn is_complete(&self) -> bool {
        self.summary.is_some()
    }

    /// The stage a session sits in when this is its last round.
    fn implied_stage(&self) -> Result<Stage, String> {
        let has = [
            !self.ratings.is_empty(),
            self.recording.is_some(),
            self.explanation.is_some(),
            self.summary.is_some(),
        ];
        // Populated fields must form a prefix of (ratings, recording, explanation, summary).
        let filled = has.iter().take_while(|h| **h).count();
        if has[filled..].iter().any(|h| *h) {
            return Err(format!("round {} has fields populated out of order", self.index));
        }
        match filled {
            0 => Ok(Stage::Commentary),
            1 => Ok(Stage::Demonstration),
            2 => Ok(Stage::Explanation),
            3 => Err(format!("round {} has an explanation but no summary", self.index)),
            _ => Ok(Stage::PosingQuestion),
        }
    }

    pub fn average_stars(&self) -> Option<f64> {
        if self.ratings.is_empty() {
            return None;
        }
        let total: u32 = self.ratings.iter().map(|r| r.stars as u32).sum();
        Some(total as f64 / self.ratings.len() as f64)
    }

    pub fn proposal(&self, ordinal: u32) -> Option<&GestureProposal> {
        self.proposals.iter().find(|p| p.ordinal == ordinal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Session {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub group_label: Option<String>,
    pub stage: Stage,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocumentError {
    #[error("malformed session document: {0}")]
    Parse(String),
    #[error("session document violates an invariant: {0}")]
    InvariantViolation(String),
}

impl DocumentError {
    pub fn code(&self) -> &'static str {
        match self {
            DocumentError::Parse(_) => "ParseError",
            DocumentError::InvariantViolation(_) => "InvariantViolation",
        }
    }
}

impl Session {
    pub fn new(group_label: Option<String>) -> Self {
        Self::with_identity(uuid::Uuid::new_v4().to_string(), Utc::now(), group_label)
    }

    pub fn with_identity(id: String, created_at: DateTime<Utc>, group_label: Option<String>) -> Self {
        Self {
            id,
            created_at,
            group_label,
            stage: Stage::PosingQuestion,
            rounds: Vec::new(),
        }
    }

    pub fn current_round(&self) -> Option<&Round> {
        self.rounds.last()
    }

    pub(crate) fn current_round_mut(&mut self) -> Option<&mut Round> {
        self.rounds.last_mut()
    }

    pub fn export(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("session serializes");
        out.push('\n');
        out
    }

    pub fn import(document: &str) -> Result<Self, DocumentError> {
        let session: Session =
            serde_json::from_str(document).map_err(|e| DocumentError::Parse(e.to_string()))?;
        session
            .check_invariants()
            .map_err(DocumentError::InvariantViolation)?;
        Ok(session)
    }

    /// Structural invariants that hold in every reachable state.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty session id".into());
        }
        for (i, round) in self.rounds.iter().enumerate() {
            if round.index as usize != i {
                return Err(format!("round at position {i} has index {}", round.index));
            }
            round
                .scenario
                .validate()
                .map_err(|e| format!("round {i}: {e}"))?;
            check_proposals(&round.proposals).map_err(|e| format!("round {i}: {e}"))?;
            let implied = round.implied_stage()?;
            let is_last = i + 1 == self.rounds.len();
            if !is_last && implied != Stage::PosingQuestion {
                return Err(format!("round {i} is incomplete but is not the last round"));
            }
            if !round.ratings.is_empty() {
                check_ratings(&round.proposals, &round.ratings)
                    .map_err(|e| format!("round {i}: {e}"))?;
            }
            if let Some(r) = &round.recording {
                r.validate().map_err(|v| format!("round {i}: {v}"))?;
            }
            if round.explanation.as_deref().is_some_and(|e| e.trim().is_empty()) {
                return Err(format!("round {i}: empty explanation"));
            }
        }
        let implied = match self.rounds.last() {
            None => Stage::PosingQuestion,
            Some(r) => r.implied_stage()?,
        };
        if implied != self.stage {
            return Err(format!(
                "stage is {} but the last round implies {}",
                self.stage, implied
            ));
        }
        Ok(())
    }
}

fn check_proposals(proposals: &ProposalSet) -> Result<(), String> {
    if proposals.is_empty() || proposals.len() > MAX_PROPOSALS {
        return Err(format!("{} proposals, expected 1..={MAX_PROPOSALS}", proposals.len()));
    }
    for (i, p) in proposals.iter().enumerate() {
        if p.ordinal as usize != i {
            return Err(format!("proposal at position {i} has ordinal {}", p.ordinal));
        }
        if p.references.is_empty() {
            return Err(format!("proposal {i} has no references"));
        }
    }
    Ok(())
}

/// Error from a ratings submission that does not cover every proposal
/// exactly once or carries an invalid entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatingCoverage {
    pub missing: Vec<u32>,
    pub duplicate: Vec<u32>,
    pub unknown: Vec<u32>,
}

pub(crate) fn check_ratings(proposals: &ProposalSet, ratings: &[Rating]) -> Result<(), SessionError> {
    for r in ratings {
        if !(MIN_STARS..=MAX_STARS).contains(&r.stars) {
            return Err(SessionError::InvalidStars {
                ordinal: r.proposal_ordinal,
                stars: r.stars,
            });
        }
        if r.comment.trim().is_empty() {
            return Err(SessionError::EmptyComment {
                ordinal: r.proposal_ordinal,
            });
        }
    }
    let expected: BTreeSet<u32> = proposals.iter().map(|p| p.ordinal).collect();
    let mut seen = BTreeSet::new();
    let mut coverage = RatingCoverage {
        missing: Vec::new(),
        duplicate: Vec::new(),
        unknown: Vec::new(),
    };
    for r in ratings {
        if !expected.contains(&r.proposal_ordinal) {
            coverage.unknown.push(r.proposal_ordinal);
        } else if !seen.insert(r.proposal_ordinal) {
            coverage.duplicate.push(r.proposal_ordinal);
        }
    }
    coverage.missing = expected.difference(&seen).copied().collect();
    if coverage.missing.is_empty() && coverage.duplicate.is_empty() && coverage.unknown.is_empty() {
        Ok(())
    } else {
        Err(SessionError::IncompleteRatings(coverage))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("operation requires stage {expected}, session is in {actual}")]
    WrongStage { expected: Stage, actual: Stage },
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[from] ScenarioError),
    #[error("ratings must cover every proposal exactly once (missing {:?}, duplicate {:?}, unknown {:?})", .0.missing, .0.duplicate, .0.unknown)]
    IncompleteRatings(RatingCoverage),
    #[error("rating for proposal {ordinal} has {stars} stars, expected 1 to 5")]
    InvalidStars { ordinal: u32, stars: u8 },
    #[error("rating for proposal {ordinal} has an empty comment")]
    EmptyComment { ordinal: u32 },
    #[error("invalid recording: {0}")]
    InvalidRecording(RecordingViolation),
    #[error("explanation is empty")]
    EmptyExplanation,
    #[error("no gesture is needed for this scenario")]
    NoGestureNeeded { message: MenteeMessage },
    #[error(transparent)]
    Agent(AgentError),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::WrongStage { .. } => "WrongStage",
            SessionError::InvalidScenario(_) => "InvalidScenario",
            SessionError::IncompleteRatings(_) => "IncompleteRatings",
            SessionError::InvalidStars { .. } => "InvalidStars",
            SessionError::EmptyComment { .. } => "EmptyComment",
            SessionError::InvalidRecording(_) => "InvalidRecording",
            SessionError::EmptyExplanation => "EmptyExplanation",
            SessionError::NoGestureNeeded { .. } => "NoGestureNeeded",
            SessionError::Agent(e) => e.code(),
        }
    }
}

impl From<AgentError> for SessionError {
    fn from(e: AgentError) -> Self {
        SessionError::Agent(e)
    }
}
