//! Domain knowledge that grounds every generation step.
//!
//! A [`KnowledgeBase`] is loaded once from a JSON document with four
//! top-level arrays (`gesture_types`, `intentions`, `citations`,
//! `exemplars`), fully validated, and then shared read-only between
//! sessions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four gesture categories. Beat gestures are deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GestureTypeKey {
    Iconic,
    Metaphoric,
    Deictic,
    Emblematic,
}

impl GestureTypeKey {
    pub const ALL: [GestureTypeKey; 4] = [
        GestureTypeKey::Iconic,
        GestureTypeKey::Metaphoric,
        GestureTypeKey::Deictic,
        GestureTypeKey::Emblematic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GestureTypeKey::Iconic => "iconic",
            GestureTypeKey::Metaphoric => "metaphoric",
            GestureTypeKey::Deictic => "deictic",
            GestureTypeKey::Emblematic => "emblematic",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GestureTypeKey::Iconic => "Iconic gesture",
            GestureTypeKey::Metaphoric => "Metaphoric gesture",
            GestureTypeKey::Deictic => "Deictic gesture",
            GestureTypeKey::Emblematic => "Emblematic gesture",
        }
    }
}

impl fmt::Display for GestureTypeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GestureTypeKey {
    type Err = UnknownKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKey(s.to_string()))
    }
}

/// The five instructional intentions a gesture can serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentionKey {
    ExplainComplex,
    AttractAttention,
    PositiveFeedback,
    ImpartNewKnowledge,
    RoleModeling,
}

impl IntentionKey {
    pub const ALL: [IntentionKey; 5] = [
        IntentionKey::ExplainComplex,
        IntentionKey::AttractAttention,
        IntentionKey::PositiveFeedback,
        IntentionKey::ImpartNewKnowledge,
        IntentionKey::RoleModeling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IntentionKey::ExplainComplex => "explain_complex",
            IntentionKey::AttractAttention => "attract_attention",
            IntentionKey::PositiveFeedback => "positive_feedback",
            IntentionKey::ImpartNewKnowledge => "impart_new_knowledge",
            IntentionKey::RoleModeling => "role_modeling",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            IntentionKey::ExplainComplex => "Explaining complex teaching content",
            IntentionKey::AttractAttention => "Attracting students' attention",
            IntentionKey::PositiveFeedback => "Providing positive feedback to students",
            IntentionKey::ImpartNewKnowledge => "Imparting new knowledge",
            IntentionKey::RoleModeling => "Role modeling",
        }
    }

    /// Where the entry is expected to come from in any valid knowledge base.
    pub fn expected_origin(self) -> Origin {
        match self {
            IntentionKey::RoleModeling => Origin::PractitionerAdded,
            _ => Origin::Literature,
        }
    }
}

impl fmt::Display for IntentionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IntentionKey {
    type Err = UnknownKey;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKey(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown taxonomy key `{0}`")]
pub struct UnknownKey(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Literature,
    PractitionerAdded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaxonomyKind {
    GestureType,
    Intention,
}

impl TaxonomyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaxonomyKind::GestureType => "gesture_type",
            TaxonomyKind::Intention => "intention",
        }
    }
}

impl fmt::Display for TaxonomyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaxonomyKind {
    type Err = UnknownKey;

    /// Accepts both the singular kind name and the plural collection name
    /// used in URLs (`gesture_types`, `intentions`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gesture_type" | "gesture_types" => Ok(TaxonomyKind::GestureType),
            "intention" | "intentions" => Ok(TaxonomyKind::Intention),
            other => Err(UnknownKey(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationRef {
    pub key: String,
    pub display: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GestureType {
    pub id: GestureTypeKey,
    pub definition: String,
    pub citations: Vec<CitationRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstructionalIntention {
    pub id: IntentionKey,
    pub description: String,
    pub origin: Origin,
    pub citations: Vec<CitationRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GestureExemplar {
    pub id: u32,
    pub scenario_text: String,
    pub gesture_description: String,
    pub gesture_type: GestureTypeKey,
    pub intention: IntentionKey,
    pub annotator_note: String,
}

impl GestureExemplar {
    pub fn to_record(&self) -> ExemplarRecord {
        ExemplarRecord {
            id: self.id,
            scenario_text: self.scenario_text.clone(),
            gesture_description: self.gesture_description.clone(),
            gesture_type: self.gesture_type.as_str().to_string(),
            intention: self.intention.as_str().to_string(),
            annotator_note: self.annotator_note.clone(),
        }
    }
}

/// Taxonomy entry returned by [`KnowledgeBase::lookup_definition`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefinitionEntry {
    pub kind: TaxonomyKind,
    pub key: String,
    pub label: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub origin: Option<Origin>,
    pub citations: Vec<CitationRef>,
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbDocument {
    pub gesture_types: Vec<GestureTypeRecord>,
    pub intentions: Vec<IntentionRecord>,
    pub citations: Vec<CitationRef>,
    #[serde(default)]
    pub exemplars: Vec<ExemplarRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GestureTypeRecord {
    pub id: String,
    pub definition: String,
    #[serde(default)]
    pub citation_keys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentionRecord {
    pub id: String,
    pub description: String,
    pub origin: Origin,
    #[serde(default)]
    pub citation_keys: Vec<String>,
}

/// Untyped exemplar as it appears in documents and ingestion files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExemplarRecord {
    pub id: u32,
    pub scenario_text: String,
    pub gesture_description: String,
    pub gesture_type: String,
    pub intention: String,
    #[serde(default)]
    pub annotator_note: String,
}

impl KbDocument {
    pub fn from_json(text: &str) -> Result<Self, KbError> {
        serde_json::from_str(text).map_err(|e| KbError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("kb document serializes");
        out.push('\n');
        out
    }
}

// ---------------------------------------------------------------------------
// Errors and validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KbError {
    #[error("cannot read knowledge base: {0}")]
    Io(String),
    #[error("malformed knowledge base document: {0}")]
    Parse(String),
    #[error("missing {kind} entry `{key}`")]
    MissingTaxonomyEntry { kind: TaxonomyKind, key: String },
    #[error("{kind} entry `{key}` is not part of the taxonomy")]
    UnexpectedTaxonomyEntry { kind: TaxonomyKind, key: String },
    #[error("{owner} references unknown {what} `{key}`")]
    DanglingReference {
        owner: String,
        what: &'static str,
        key: String,
    },
    #[error("invalid entry {owner}: {reason}")]
    InvalidEntry { owner: String, reason: String },
}

impl KbError {
    pub fn code(&self) -> &'static str {
        match self {
            KbError::Io(_) => "IoError",
            KbError::Parse(_) => "ParseError",
            KbError::MissingTaxonomyEntry { .. } => "MissingTaxonomyEntry",
            KbError::UnexpectedTaxonomyEntry { .. } => "UnexpectedTaxonomyEntry",
            KbError::DanglingReference { .. } => "DanglingReference",
            KbError::InvalidEntry { .. } => "InvalidEntry",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum ExemplarViolation {
    UnknownGestureType { value: String },
    UnknownIntention { value: String },
    EmptyField { field: &'static str },
}

impl fmt::Display for ExemplarViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExemplarViolation::UnknownGestureType { value } => {
                write!(f, "UnknownGestureType: `{value}`")
            }
            ExemplarViolation::UnknownIntention { value } => {
                write!(f, "UnknownIntention: `{value}`")
            }
            ExemplarViolation::EmptyField { field } => write!(f, "EmptyField: `{field}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<ExemplarViolation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_exemplar(record: &ExemplarRecord) -> ValidationReport {
    let mut violations = Vec::new();
    if record.gesture_type.parse::<GestureTypeKey>().is_err() {
        violations.push(ExemplarViolation::UnknownGestureType {
            value: record.gesture_type.clone(),
        });
    }
    if record.intention.parse::<IntentionKey>().is_err() {
        violations.push(ExemplarViolation::UnknownIntention {
            value: record.intention.clone(),
        });
    }
    if record.scenario_text.trim().is_empty() {
        violations.push(ExemplarViolation::EmptyField {
            field: "scenario_text",
        });
    }
    if record.gesture_description.trim().is_empty() {
        violations.push(ExemplarViolation::EmptyField {
            field: "gesture_description",
        });
    }
    ValidationReport { violations }
}

/// Every problem in a document, in a stable order: taxonomy coverage,
/// citations, taxonomy entries, then exemplars. An empty result means the
/// document loads.
pub fn audit_document(doc: &KbDocument) -> Vec<KbError> {
    let mut problems = Vec::new();

    let mut citation_keys = BTreeSet::new();
    for c in &doc.citations {
        if c.key.trim().is_empty() {
            problems.push(KbError::InvalidEntry {
                owner: "citation".into(),
                reason: "empty key".into(),
            });
        } else if !citation_keys.insert(c.key.as_str()) {
            problems.push(KbError::InvalidEntry {
                owner: format!("citation `{}`", c.key),
                reason: "duplicate key".into(),
            });
        }
        if c.display.trim().is_empty() {
            problems.push(KbError::InvalidEntry {
                owner: format!("citation `{}`", c.key),
                reason: "empty display string".into(),
            });
        }
    }

    let mut seen_types = BTreeSet::new();
    for g in &doc.gesture_types {
        let owner = format!("gesture_type `{}`", g.id);
        match g.id.parse::<GestureTypeKey>() {
            Ok(key) => {
                if !seen_types.insert(key) {
                    problems.push(KbError::InvalidEntry {
                        owner: owner.clone(),
                        reason: "duplicate entry".into(),
                    });
                }
            }
            Err(_) => problems.push(KbError::UnexpectedTaxonomyEntry {
                kind: TaxonomyKind::GestureType,
                key: g.id.clone(),
            }),
        }
        if g.definition.trim().is_empty() {
            problems.push(KbError::InvalidEntry {
                owner: owner.clone(),
                reason: "empty definition".into(),
            });
        }
        // Proposal references are drawn from here, so every type must cite something.
        if g.citation_keys.is_empty() {
            problems.push(KbError::InvalidEntry {
                owner: owner.clone(),
                reason: "no citations".into(),
            });
        }
        dangling(&owner, &g.citation_keys, &citation_keys, &mut problems);
    }

    let mut seen_intentions = BTreeSet::new();
    for i in &doc.intentions {
        let owner = format!("intention `{}`", i.id);
        match i.id.parse::<IntentionKey>() {
            Ok(key) => {
                if !seen_intentions.insert(key) {
                    problems.push(KbError::InvalidEntry {
                        owner: owner.clone(),
                        reason: "duplicate entry".into(),
                    });
                }
                if i.origin != key.expected_origin() {
                    problems.push(KbError::InvalidEntry {
                        owner: owner.clone(),
                        reason: format!("origin must be {:?}", key.expected_origin()),
                    });
                }
            }
            Err(_) => problems.push(KbError::UnexpectedTaxonomyEntry {
                kind: TaxonomyKind::Intention,
                key: i.id.clone(),
            }),
        }
        if i.description.trim().is_empty() {
            problems.push(KbError::InvalidEntry {
                owner: owner.clone(),
                reason: "empty description".into(),
            });
        }
        if i.citation_keys.is_empty() && i.origin == Origin::Literature {
            problems.push(KbError::InvalidEntry {
                owner: owner.clone(),
                reason: "literature-derived intention without citations".into(),
            });
        }
        dangling(&owner, &i.citation_keys, &citation_keys, &mut problems);
    }

    let mut missing = Vec::new();
    for key in GestureTypeKey::ALL {
        if !seen_types.contains(&key) {
            missing.push(KbError::MissingTaxonomyEntry {
                kind: TaxonomyKind::GestureType,
                key: key.as_str().into(),
            });
        }
    }
    for key in IntentionKey::ALL {
        if !seen_intentions.contains(&key) {
            missing.push(KbError::MissingTaxonomyEntry {
                kind: TaxonomyKind::Intention,
                key: key.as_str().into(),
            });
        }
    }

    let mut exemplar_ids = HashSet::new();
    for e in &doc.exemplars {
        let owner = format!("exemplar {}", e.id);
        if !exemplar_ids.insert(e.id) {
            problems.push(KbError::InvalidEntry {
                owner: owner.clone(),
                reason: "duplicate id".into(),
            });
        }
        for v in check_exemplar(e).violations {
            problems.push(match v {
                ExemplarViolation::UnknownGestureType { value } => KbError::DanglingReference {
                    owner: owner.clone(),
                    what: "gesture_type",
                    key: value,
                },
                ExemplarViolation::UnknownIntention { value } => KbError::DanglingReference {
                    owner: owner.clone(),
                    what: "intention",
                    key: value,
                },
                other => KbError::InvalidEntry {
                    owner: owner.clone(),
                    reason: other.to_string(),
                },
            });
        }
        // Taxonomy keys that parse but are absent from this document dangle too.
        if let Ok(k) = e.intention.parse::<IntentionKey>() {
            if !seen_intentions.contains(&k) {
                problems.push(KbError::DanglingReference {
                    owner: owner.clone(),
                    what: "intention",
                    key: e.intention.clone(),
                });
            }
        }
        if let Ok(k) = e.gesture_type.parse::<GestureTypeKey>() {
            if !seen_types.contains(&k) {
                problems.push(KbError::DanglingReference {
                    owner,
                    what: "gesture_type",
                    key: e.gesture_type.clone(),
                });
            }
        }
    }

    missing.extend(problems);
    missing
}

fn dangling(owner: &str, keys: &[String], known: &BTreeSet<&str>, out: &mut Vec<KbError>) {
    for k in keys {
        if !known.contains(k.as_str()) {
            out.push(KbError::DanglingReference {
                owner: owner.to_string(),
                what: "citation",
                key: k.clone(),
            });
        }
    }
}

// ---------------------------------------------------------------------------
// KnowledgeBase
// ---------------------------------------------------------------------------

/// Validated, immutable domain knowledge. Share it behind an `Arc`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeBase {
    gesture_types: BTreeMap<GestureTypeKey, GestureType>,
    intentions: BTreeMap<IntentionKey, InstructionalIntention>,
    exemplars: Vec<GestureExemplar>,
    citations: BTreeMap<String, CitationRef>,
}

impl KnowledgeBase {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| KbError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, KbError> {
        Self::from_document(KbDocument::from_json(text)?)
    }

    pub fn from_document(doc: KbDocument) -> Result<Self, KbError> {
        if let Some(first) = audit_document(&doc).into_iter().next() {
            return Err(first);
        }

        let citations: BTreeMap<String, CitationRef> = doc
            .citations
            .into_iter()
            .map(|c| (c.key.clone(), c))
            .collect();
        let resolve = |keys: &[String]| -> Vec<CitationRef> {
            keys.iter().map(|k| citations[k].clone()).collect()
        };

        let gesture_types = doc
            .gesture_types
            .iter()
            .map(|g| {
                let id: GestureTypeKey = g.id.parse().expect("audited");
                let entry = GestureType {
                    id,
                    definition: g.definition.clone(),
                    citations: resolve(&g.citation_keys),
                };
                (id, entry)
            })
            .collect();
        let intentions = doc
            .intentions
            .iter()
            .map(|i| {
                let id: IntentionKey = i.id.parse().expect("audited");
                let entry = InstructionalIntention {
                    id,
                    description: i.description.clone(),
                    origin: i.origin,
                    citations: resolve(&i.citation_keys),
                };
                (id, entry)
            })
            .collect();
        let exemplars = doc
            .exemplars
            .into_iter()
            .map(|e| GestureExemplar {
                id: e.id,
                gesture_type: e.gesture_type.parse().expect("audited"),
                intention: e.intention.parse().expect("audited"),
                scenario_text: e.scenario_text,
                gesture_description: e.gesture_description,
                annotator_note: e.annotator_note,
            })
            .collect();

        Ok(Self {
            gesture_types,
            intentions,
            exemplars,
            citations,
        })
    }

    /// Rebuilds the document form, e.g. to write back after ingestion.
    pub fn to_document(&self) -> KbDocument {
        KbDocument {
            gesture_types: self
                .gesture_types
                .values()
                .map(|g| GestureTypeRecord {
                    id: g.id.as_str().into(),
                    definition: g.definition.clone(),
                    citation_keys: g.citations.iter().map(|c| c.key.clone()).collect(),
                })
                .collect(),
            intentions: self
                .intentions
                .values()
                .map(|i| IntentionRecord {
                    id: i.id.as_str().into(),
                    description: i.description.clone(),
                    origin: i.origin,
                    citation_keys: i.citations.iter().map(|c| c.key.clone()).collect(),
                })
                .collect(),
            citations: self.citations.values().cloned().collect(),
            exemplars: self.exemplars.iter().map(GestureExemplar::to_record).collect(),
        }
    }

    pub fn gesture_types(&self) -> impl Iterator<Item = &GestureType> {
        self.gesture_types.values()
    }

    pub fn intentions(&self) -> impl Iterator<Item = &InstructionalIntention> {
        self.intentions.values()
    }

    pub fn exemplars(&self) -> &[GestureExemplar] {
        &self.exemplars
    }

    pub fn exemplar(&self, id: u32) -> Option<&GestureExemplar> {
        self.exemplars.iter().find(|e| e.id == id)
    }

    pub fn citations(&self) -> impl Iterator<Item = &CitationRef> {
        self.citations.values()
    }

    pub fn citation(&self, key: &str) -> Option<&CitationRef> {
        self.citations.get(key)
    }

    pub fn gesture_type(&self, key: GestureTypeKey) -> &GestureType {
        &self.gesture_types[&key]
    }

    pub fn intention(&self, key: IntentionKey) -> &InstructionalIntention {
        &self.intentions[&key]
    }

    pub fn lookup_definition(
        &self,
        kind: TaxonomyKind,
        key: &str,
    ) -> Result<DefinitionEntry, LookupError> {
        let not_found = || LookupError::NotFound {
            kind,
            key: key.to_string(),
        };
        match kind {
            TaxonomyKind::GestureType => {
                let k: GestureTypeKey = key.parse().map_err(|_| not_found())?;
                let g = self.gesture_type(k);
                Ok(DefinitionEntry {
                    kind,
                    key: k.as_str().into(),
                    label: k.label().into(),
                    text: g.definition.clone(),
                    origin: None,
                    citations: g.citations.clone(),
                })
            }
            TaxonomyKind::Intention => {
                let k: IntentionKey = key.parse().map_err(|_| not_found())?;
                let i = self.intention(k);
                Ok(DefinitionEntry {
                    kind,
                    key: k.as_str().into(),
                    label: k.label().into(),
                    text: i.description.clone(),
                    origin: Some(i.origin),
                    citations: i.citations.clone(),
                })
            }
        }
    }

    /// Checks a candidate exemplar against the taxonomy. Violations are data.
    pub fn validate_exemplar(&self, candidate: &ExemplarRecord) -> ValidationReport {
        check_exemplar(candidate)
    }

    /// Citation keys backing a (gesture type, intention) pair, deduplicated
    /// in first-seen order: the gesture type's keys, then the intention's.
    pub fn references_for(&self, gesture: GestureTypeKey, intention: IntentionKey) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let all = self
            .gesture_type(gesture)
            .citations
            .iter()
            .chain(self.intention(intention).citations.iter());
        for c in all {
            if !out.contains(&c.key) {
                out.push(c.key.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("no {kind} named `{key}`")]
    NotFound { kind: TaxonomyKind, key: String },
}

/// Appends validated exemplars to a document. Returns the per-record
/// problems instead when any record is invalid or collides with an
/// existing id.
pub fn ingest_exemplars(
    doc: &KbDocument,
    records: &[ExemplarRecord],
) -> Result<KbDocument, Vec<(u32, String)>> {
    let mut problems = Vec::new();
    let mut ids: HashSet<u32> = doc.exemplars.iter().map(|e| e.id).collect();
    for r in records {
        for v in check_exemplar(r).violations {
            problems.push((r.id, v.to_string()));
        }
        if !ids.insert(r.id) {
            problems.push((r.id, "DuplicateId".to_string()));
        }
    }
    if !problems.is_empty() {
        return Err(problems);
    }
    let mut out = doc.clone();
    out.exemplars.extend(records.iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn kb() -> KnowledgeBase {
        KnowledgeBase::from_json(fixtures::CANONICAL_KB).unwrap()
    }

    fn doc() -> KbDocument {
        KbDocument::from_json(fixtures::CANONICAL_KB).unwrap()
    }

    #[test]
    fn canonical_fixture_counts() {
        let kb = kb();
        assert_eq!(kb.gesture_types().count(), 4);
        assert_eq!(kb.intentions().count(), 5);
        assert_eq!(kb.exemplars().len(), 16);
        let raw: serde_json::Value = serde_json::from_str(fixtures::CANONICAL_KB).unwrap();
        assert_eq!(raw["exemplars"].as_array().unwrap().len(), kb.exemplars().len());
    }

    #[test]
    fn twelve_exemplar_fixture_loads() {
        let mut d = doc();
        d.exemplars.truncate(12);
        let kb = KnowledgeBase::from_document(d).unwrap();
        assert_eq!(
            (kb.gesture_types().count(), kb.intentions().count(), kb.exemplars().len()),
            (4, 5, 12)
        );
    }

    #[test]
    fn missing_role_modeling_fixture_is_rejected() {
        let err = KnowledgeBase::from_json(fixtures::KB_MISSING_ROLE_MODELING).unwrap_err();
        assert_eq!(
            err,
            KbError::MissingTaxonomyEntry {
                kind: TaxonomyKind::Intention,
                key: "role_modeling".into()
            }
        );
    }

    #[test]
    fn empty_corpus_is_legal() {
        let mut d = doc();
        d.exemplars.clear();
        let kb = KnowledgeBase::from_document(d).unwrap();
        assert!(kb.exemplars().is_empty());
    }

    #[test]
    fn beat_gesture_row_is_unexpected() {
        let mut d = doc();
        d.gesture_types.push(GestureTypeRecord {
            id: "beat".into(),
            definition: "rhythmic".into(),
            citation_keys: vec!["mcneill1992".into()],
        });
        assert!(matches!(
            KnowledgeBase::from_document(d),
            Err(KbError::UnexpectedTaxonomyEntry { .. })
        ));
    }

    #[test]
    fn dangling_citation_key() {
        let mut d = doc();
        d.gesture_types[0].citation_keys.push("nobody2000".into());
        assert_eq!(
            KnowledgeBase::from_document(d).unwrap_err(),
            KbError::DanglingReference {
                owner: "gesture_type `iconic`".into(),
                what: "citation",
                key: "nobody2000".into()
            }
        );
    }

    #[test]
    fn dangling_exemplar_intention() {
        let mut d = doc();
        d.exemplars[0].intention = "motivate".into();
        assert!(matches!(
            KnowledgeBase::from_document(d),
            Err(KbError::DanglingReference { what: "intention", .. })
        ));
    }

    #[test]
    fn role_modeling_must_be_practitioner_added() {
        let mut d = doc();
        let rm = d.intentions.iter_mut().find(|i| i.id == "role_modeling").unwrap();
        rm.origin = Origin::Literature;
        rm.citation_keys.push("mcneill1992".into());
        assert!(matches!(
            KnowledgeBase::from_document(d),
            Err(KbError::InvalidEntry { .. })
        ));
    }

    #[test]
    fn unknown_field_is_parse_error() {
        let text = fixtures::CANONICAL_KB.replacen("\"gesture_types\"", "\"extra\": 1, \"gesture_types\"", 1);
        assert!(matches!(KnowledgeBase::from_json(&text), Err(KbError::Parse(_))));
        assert!(matches!(KnowledgeBase::from_json("{"), Err(KbError::Parse(_))));
    }

    #[test]
    fn deterministic_load() {
        assert_eq!(kb(), kb());
    }

    #[test]
    fn document_round_trip() {
        let kb = kb();
        assert_eq!(KnowledgeBase::from_document(kb.to_document()).unwrap(), kb);
    }

    #[test]
    fn lookup_deictic_points_out() {
        let entry = kb()
            .lookup_definition(TaxonomyKind::GestureType, "deictic")
            .unwrap();
        assert!(entry.text.contains("point out"));
        assert!(!entry.citations.is_empty());
    }

    #[test]
    fn lookup_role_modeling_origin() {
        let entry = kb()
            .lookup_definition(TaxonomyKind::Intention, "role_modeling")
            .unwrap();
        assert_eq!(entry.origin, Some(Origin::PractitionerAdded));
    }

    #[test]
    fn lookup_beat_not_found() {
        assert_eq!(
            kb().lookup_definition(TaxonomyKind::GestureType, "beat"),
            Err(LookupError::NotFound {
                kind: TaxonomyKind::GestureType,
                key: "beat".into()
            })
        );
    }

    #[test]
    fn lookup_succeeds_iff_key_in_taxonomy() {
        let kb = kb();
        let candidates = [
            "iconic", "metaphoric", "deictic", "emblematic", "beat", "explain_complex",
            "attract_attention", "positive_feedback", "impart_new_knowledge", "role_modeling",
            "motivate", "", "Iconic",
        ];
        for c in candidates {
            let is_type = GestureTypeKey::ALL.iter().any(|k| k.as_str() == c);
            let is_int = IntentionKey::ALL.iter().any(|k| k.as_str() == c);
            assert_eq!(kb.lookup_definition(TaxonomyKind::GestureType, c).is_ok(), is_type, "{c}");
            assert_eq!(kb.lookup_definition(TaxonomyKind::Intention, c).is_ok(), is_int, "{c}");
        }
    }

    fn record(gesture_type: &str, description: &str) -> ExemplarRecord {
        ExemplarRecord {
            id: 99,
            scenario_text: "A teacher explains gravity.".into(),
            gesture_description: description.into(),
            gesture_type: gesture_type.into(),
            intention: "explain_complex".into(),
            annotator_note: "".into(),
        }
    }

    #[test]
    fn validate_well_formed_exemplar() {
        assert!(kb().validate_exemplar(&record("metaphoric", "Hands pull downward.")).is_ok());
    }

    #[test]
    fn validate_unknown_gesture_type() {
        let report = kb().validate_exemplar(&record("rhythmic", "Hands pull downward."));
        assert_eq!(
            report.violations,
            vec![ExemplarViolation::UnknownGestureType { value: "rhythmic".into() }]
        );
    }

    #[test]
    fn validate_empty_description() {
        let report = kb().validate_exemplar(&record("iconic", "  "));
        assert_eq!(
            report.violations,
            vec![ExemplarViolation::EmptyField { field: "gesture_description" }]
        );
    }

    #[test]
    fn every_loaded_exemplar_validates() {
        let kb = kb();
        for e in kb.exemplars() {
            assert!(kb.validate_exemplar(&e.to_record()).is_ok());
        }
    }

    #[test]
    fn ingest_rejects_duplicate_ids() {
        let d = doc();
        let dup = d.exemplars[0].clone();
        let err = ingest_exemplars(&d, &[dup]).unwrap_err();
        assert_eq!(err, vec![(0, "DuplicateId".to_string())]);

        let mut fresh = record("iconic", "Hands shape a ball.");
        fresh.id = 500;
        let out = ingest_exemplars(&d, &[fresh]).unwrap();
        assert_eq!(out.exemplars.len(), d.exemplars.len() + 1);
        KnowledgeBase::from_document(out).unwrap();
    }

    #[test]
    fn references_are_deduplicated() {
        let kb = kb();
        let refs = kb.references_for(GestureTypeKey::Iconic, IntentionKey::ExplainComplex);
        assert_eq!(refs, vec!["mcneill1992", "lim2019", "kang2013", "ahmadi2023", "alibali2014", "abakumova2021"]);
        let refs = kb.references_for(GestureTypeKey::Deictic, IntentionKey::RoleModeling);
        assert_eq!(refs, vec!["mcneill1992", "lim2019"]);
    }
}
