//! Session operations wired to the agents.
//!
//! Every operation checks the stage, validates its input, performs all
//! provider calls, and only then mutates the session. A failed or
//! cancelled operation leaves the session untouched.

use std::sync::Arc;

use crate::agents::mentee::{demonstration_payload, explanation_payload, feedback_payload, note_payload};
use crate::agents::{
    mentee_reply, run_generation_pipeline, summarize_principles, AgentError, ChunkSink, MenteeEvent,
    MenteeMessage, ProposalSet, SessionView,
};
use crate::knowledge::KnowledgeBase;
use crate::llm::ChatProvider;
use crate::retrieval::{build_index, Embedder, ExemplarIndex, RetrievalError};
use crate::scenario::TeachingScenario;
use crate::session::{check_ratings, Rating, Round, Session, SessionError, SkeletalRecording, Stage};

#[derive(Clone)]
pub struct Engine {
    kb: Arc<KnowledgeBase>,
    index: Arc<ExemplarIndex>,
    chat: Arc<dyn ChatProvider>,
    embedder: Arc<dyn Embedder>,
}

const NOTHING_TO_GESTURE: &str =
    "none of the teaching intentions I found in this scenario seems to need a gesture.";

fn expect_stage(session: &Session, expected: Stage) -> Result<(), SessionError> {
    if session.stage == expected {
        Ok(())
    } else {
        Err(SessionError::WrongStage {
            expected,
            actual: session.stage,
        })
    }
}

fn open_round(session: &Session) -> Result<&Round, SessionError> {
    session
        .current_round()
        .ok_or_else(|| AgentError::Precondition("session has no open round".into()).into())
}

fn view<'a>(session: &Session, round: Option<&'a Round>) -> SessionView<'a> {
    SessionView {
        stage: session.stage,
        round,
        completed_rounds: session.rounds.iter().filter(|r| r.is_complete()).count(),
    }
}

impl Engine {
    pub fn new(
        kb: Arc<KnowledgeBase>,
        index: Arc<ExemplarIndex>,
        chat: Arc<dyn ChatProvider>,
        embedder: Arc<dyn Embedder>,
    ) -> Self {
        Self {
            kb,
            index,
            chat,
            embedder,
        }
    }

    /// Embeds the knowledge base exemplars and assembles an engine.
    pub async fn build(
        kb: Arc<KnowledgeBase>,
        chat: Arc<dyn ChatProvider>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self, RetrievalError> {
        let index = build_index(&kb, embedder.as_ref()).await?;
        Ok(Self::new(kb, Arc::new(index), chat, embedder))
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn index(&self) -> &ExemplarIndex {
        &self.index
    }

    pub async fn submit_scenario(
        &self,
        session: &mut Session,
        scenario: TeachingScenario,
        sink: Option<&ChunkSink>,
    ) -> Result<(ProposalSet, MenteeMessage), SessionError> {
        expect_stage(session, Stage::PosingQuestion)?;
        scenario.validate()?;
        let proposals = match run_generation_pipeline(
            self.chat.as_ref(),
            &self.kb,
            &self.index,
            self.embedder.as_ref(),
            &scenario,
        )
        .await
        {
            Ok(p) => p,
            Err(AgentError::NoGestureNeeded { .. }) => {
                let v = view(session, None);
                let message = mentee_reply(
                    self.chat.as_ref(),
                    &self.kb,
                    &v,
                    MenteeEvent::StageEntered(Stage::PosingQuestion),
                    &note_payload(NOTHING_TO_GESTURE),
                    sink,
                )
                .await?;
                return Err(SessionError::NoGestureNeeded { message });
            }
            Err(e) => return Err(e.into()),
        };
        let mut round = Round {
            index: session.rounds.len() as u32,
            scenario,
            proposals,
            mentee_messages: Vec::new(),
            ratings: Vec::new(),
            recording: None,
            explanation: None,
            summary: None,
        };
        let message = mentee_reply(
            self.chat.as_ref(),
            &self.kb,
            &view(session, Some(&round)),
            MenteeEvent::StageEntered(Stage::Commentary),
            "",
            sink,
        )
        .await?;
        round.mentee_messages.push(message.clone());
        let proposals = round.proposals.clone();
        session.rounds.push(round);
        session.stage = Stage::Commentary;
        Ok((proposals, message))
    }

    pub async fn submit_commentary(
        &self,
        session: &mut Session,
        mut ratings: Vec<Rating>,
        sink: Option<&ChunkSink>,
    ) -> Result<MenteeMessage, SessionError> {
        expect_stage(session, Stage::Commentary)?;
        let round = open_round(session)?;
        check_ratings(&round.proposals, &ratings)?;
        ratings.sort_by_key(|r| r.proposal_ordinal);
        let message = mentee_reply(
            self.chat.as_ref(),
            &self.kb,
            &view(session, Some(round)),
            MenteeEvent::RatingsSubmitted,
            &feedback_payload(round, &ratings),
            sink,
        )
        .await?;
        let round = session.current_round_mut().expect("checked above");
        round.ratings = ratings;
        round.mentee_messages.push(message.clone());
        session.stage = Stage::Demonstration;
        Ok(message)
    }

    pub async fn attach_demonstration(
        &self,
        session: &mut Session,
        recording: SkeletalRecording,
        sink: Option<&ChunkSink>,
    ) -> Result<MenteeMessage, SessionError> {
        expect_stage(session, Stage::Demonstration)?;
        let round = open_round(session)?;
        recording.validate().map_err(SessionError::InvalidRecording)?;
        let message = mentee_reply(
            self.chat.as_ref(),
            &self.kb,
            &view(session, Some(round)),
            MenteeEvent::DemonstrationAttached,
            &demonstration_payload(&recording),
            sink,
        )
        .await?;
        let round = session.current_round_mut().expect("checked above");
        round.recording = Some(recording);
        round.mentee_messages.push(message.clone());
        session.stage = Stage::Explanation;
        Ok(message)
    }

    pub async fn submit_explanation(
        &self,
        session: &mut Session,
        text: &str,
        sink: Option<&ChunkSink>,
    ) -> Result<(String, MenteeMessage), SessionError> {
        expect_stage(session, Stage::Explanation)?;
        let round = open_round(session)?;
        let text = text.trim();
        if text.is_empty() {
            return Err(SessionError::EmptyExplanation);
        }
        let mut draft = round.clone();
        draft.explanation = Some(text.to_string());
        let earlier: Vec<&str> = session
            .rounds
            .iter()
            .filter_map(|r| r.summary.as_deref())
            .collect();
        let summary = summarize_principles(self.chat.as_ref(), &self.kb, &draft, &earlier).await?;
        let message = mentee_reply(
            self.chat.as_ref(),
            &self.kb,
            &view(session, Some(&draft)),
            MenteeEvent::ExplanationSubmitted,
            &explanation_payload(text),
            sink,
        )
        .await?;
        draft.summary = Some(summary.clone());
        draft.mentee_messages.push(message.clone());
        *session.current_round_mut().expect("checked above") = draft;
        session.stage = Stage::PosingQuestion;
        Ok((summary, message))
    }
}
