//! System prompts and per-request task messages.
//!
//! Task messages are line-oriented with fixed labels (see [`labels`]) so
//! that the scripted stub provider can read them back.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::structured::schema_hint;
use super::IntentionFinding;
use crate::knowledge::{GestureExemplar, KnowledgeBase};
use crate::llm::SchemaId;
use crate::scenario::TeachingScenario;

pub mod labels {
    pub const SCENARIO: &str = "Scenario";
    pub const INTENTION: &str = "Intention";
    pub const INTENTION_DESCRIPTION: &str = "Intention description";
    pub const ANALYST_RATIONALE: &str = "Why a gesture helps";
    pub const EXAMPLE_SCENARIO: &str = "Example scenario";
    pub const EXAMPLE_GESTURE: &str = "Example gesture";
    pub const EXAMPLE_TYPE: &str = "Example gesture type";
    pub const EXAMPLE_INTENTION: &str = "Example intention";
    pub const EXAMPLE_NOTE: &str = "Example annotator note";
    pub const EVENT: &str = "Event";
    pub const STAGE: &str = "Stage";
    pub const PROPOSAL_COUNT: &str = "Proposal count";
    pub const FEEDBACK: &str = "Feedback:";
    pub const NOTE: &str = "Note";
    pub const EXPLANATION: &str = "Explanation";
    pub const AVERAGE_RATING: &str = "Average rating";
    pub const DEMONSTRATION: &str = "Demonstration";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    IntentionAnalyzer,
    GestureGenerator,
    MenteePersona,
}

const PERSONA_NAME: &str = "Novobo";

pub fn assemble_system_prompt(kb: &KnowledgeBase, agent: AgentKind) -> String {
    match agent {
        AgentKind::IntentionAnalyzer => analyzer_prompt(kb),
        AgentKind::GestureGenerator => generator_prompt(kb),
        AgentKind::MenteePersona => persona_prompt(kb),
    }
}

fn intention_block(kb: &KnowledgeBase, out: &mut String) {
    out.push_str("Instructional intentions (use exactly these keys):\n");
    for i in kb.intentions() {
        let _ = writeln!(out, "- {} ({}): {}", i.id, i.id.label(), i.description);
    }
}

fn gesture_block(kb: &KnowledgeBase, out: &mut String) {
    out.push_str("Gesture types (use exactly these keys):\n");
    for g in kb.gesture_types() {
        let _ = writeln!(out, "- {} ({}): {}", g.id, g.id.label(), g.definition);
    }
}

fn reply_format(schema: SchemaId, out: &mut String) {
    let _ = write!(
        out,
        "\nReply with only a JSON document of this form and no other fields:\n{}\n",
        schema_hint(schema)
    );
}

fn analyzer_prompt(kb: &KnowledgeBase) -> String {
    let mut p = String::from(
        "You are the intention analysis agent of a teachable agent that learns about instructional gestures from teachers.\n\
         Given a teaching scenario, identify the instructional intentions a teacher could have at that moment and decide, for each one, whether a gesture would serve it.\n\n",
    );
    intention_block(kb, &mut p);
    p.push_str(
        "\nThink step by step:\n\
         1. Read the scenario and note the subject, grade level, lesson topic, and what the teacher says or does.\n\
         2. List each intention above that the teacher plausibly has in this scenario.\n\
         3. For each intention, decide whether a gesture would clearly help the students and set needs_gesture accordingly.\n\
         4. Order the findings from most to least important.\n\
         Write this reasoning in the \"analysis\" field before giving the findings.\n",
    );
    reply_format(SchemaId::IntentionFindings, &mut p);
    p
}

fn generator_prompt(kb: &KnowledgeBase) -> String {
    let mut p = String::from(
        "You are the gesture generation agent of a teachable agent that learns about instructional gestures from teachers.\n\
         Given a teaching scenario and one instructional intention, choose the gesture type that best serves the intention and describe the gesture concretely.\n\n",
    );
    gesture_block(kb, &mut p);
    p.push_str(
        "\nThink step by step:\n\
         1. Restate what the students need at this moment given the intention.\n\
         2. Compare the gesture types above and pick the one that serves the intention best.\n\
         3. If an annotated example from a real classroom is provided, follow its level of detail and style, but adapt it to this scenario.\n\
         4. Describe the movement of the hands, arms, and body so that a teacher could perform it, and explain why it serves the intention.\n\
         Write this reasoning in the \"analysis\" field before giving the gesture.\n",
    );
    reply_format(SchemaId::GestureProposal, &mut p);
    p
}

fn persona_prompt(kb: &KnowledgeBase) -> String {
    let mut p = format!(
        "You are {PERSONA_NAME}, a novice AI teacher who is skilled in the theory of instructional gestures but lacks practical classroom experience.\n\
         A group of experienced teachers are your mentors. They pose teaching scenarios, rate and comment on your gesture ideas, demonstrate their own gestures, and explain them to you.\n\n\
         Rules:\n\
         - Speak as a humble, curious mentee. Never lecture the teachers and never present your ideas as recommendations.\n\
         - Keep each reply to two to four short sentences of plain text, without Markdown or JSON.\n\
         - When the teachers give feedback, restate concretely what you learned from it.\n\
         - Guide the teachers to the next step: posing a scenario, rating and commenting on every gesture, demonstrating with the skeletal mirror, then explaining their gesture.\n\
         - When you mention theory, name the gesture type or instructional intention it belongs to.\n\
         - Reply in the language the teachers use.\n\n\
         Gesture types you know: ",
    );
    let types: Vec<&str> = kb.gesture_types().map(|g| g.id.label()).collect();
    p.push_str(&types.join(", "));
    p.push_str(".\nInstructional intentions you know: ");
    let intentions: Vec<&str> = kb.intentions().map(|i| i.id.label()).collect();
    p.push_str(&intentions.join(", "));
    p.push_str(".\n");
    p
}

/// The persona prompt extended with the round-summary instructions.
pub fn summary_system_prompt(kb: &KnowledgeBase) -> String {
    let mut p = persona_prompt(kb);
    p.push_str(
        "\nNow summarize, in a few sentences, the principles and guidelines for using instructional gestures that the teachers shared with you in this round. \
         Draw on their ratings, comments, demonstration, and explanation, and acknowledge the insights you gained from them.\n",
    );
    reply_format(SchemaId::Summary, &mut p);
    p
}

pub fn analyzer_task(scenario: &TeachingScenario) -> String {
    format!("Analyze this teaching scenario.\n{}\n", scenario.render())
}

pub fn generator_task(
    kb: &KnowledgeBase,
    scenario: &TeachingScenario,
    finding: &IntentionFinding,
    example: Option<&GestureExemplar>,
) -> String {
    let mut t = format!("Propose one gesture for this teaching scenario.\n{}\n", scenario.render());
    let _ = writeln!(t, "{}: {}", labels::INTENTION, finding.intention);
    let _ = writeln!(
        t,
        "{}: {}",
        labels::INTENTION_DESCRIPTION,
        kb.intention(finding.intention).description
    );
    let _ = writeln!(t, "{}: {}", labels::ANALYST_RATIONALE, finding.rationale);
    if let Some(e) = example {
        t.push_str("\nAnnotated example from a real classroom:\n");
        let _ = writeln!(t, "{}: {}", labels::EXAMPLE_SCENARIO, e.scenario_text);
        let _ = writeln!(t, "{}: {}", labels::EXAMPLE_GESTURE, e.gesture_description);
        let _ = writeln!(t, "{}: {}", labels::EXAMPLE_TYPE, e.gesture_type);
        let _ = writeln!(t, "{}: {}", labels::EXAMPLE_INTENTION, e.intention);
        if !e.annotator_note.trim().is_empty() {
            let _ = writeln!(t, "{}: {}", labels::EXAMPLE_NOTE, e.annotator_note);
        }
    }
    t
}

/// Correction appended after a rejected reply.
pub fn retry_message(violation: &str) -> String {
    format!(
        "Your previous reply was rejected: {violation}. Reply again with only a JSON document in the required form."
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::from_json(fixtures::CANONICAL_KB).unwrap()
    }

    #[test]
    fn analyzer_prompt_lists_every_intention() {
        let kb = kb();
        let p = assemble_system_prompt(&kb, AgentKind::IntentionAnalyzer);
        for i in kb.intentions() {
            assert!(p.contains(&i.description), "{}", i.id);
        }
        assert!(p.contains("step by step"));
    }

    #[test]
    fn generator_prompt_lists_every_gesture_type() {
        let kb = kb();
        let p = assemble_system_prompt(&kb, AgentKind::GestureGenerator);
        for g in kb.gesture_types() {
            assert!(p.contains(&g.definition), "{}", g.id);
        }
        assert!(p.contains("step by step"));
    }

    #[test]
    fn persona_prompt_has_rules_and_no_exemplars() {
        let kb = kb();
        let p = assemble_system_prompt(&kb, AgentKind::MenteePersona);
        assert!(p.contains("novice AI teacher"));
        assert!(p.contains("Rules:"));
        for e in kb.exemplars() {
            assert!(!p.contains(&e.scenario_text));
            assert!(!p.contains(&e.gesture_description));
        }
    }

    #[test]
    fn generator_task_carries_example() {
        let kb = kb();
        let finding = IntentionFinding {
            intention: crate::knowledge::IntentionKey::ExplainComplex,
            needs_gesture: true,
            rationale: "abstract process".into(),
        };
        let s = TeachingScenario::custom("The leaves gently fell down.");
        let with = generator_task(&kb, &s, &finding, Some(&kb.exemplars()[3]));
        assert!(with.contains(&kb.exemplars()[3].gesture_description));
        assert!(with.contains("Intention: explain_complex"));
        let without = generator_task(&kb, &s, &finding, None);
        assert!(!without.contains(labels::EXAMPLE_GESTURE));
    }
}
