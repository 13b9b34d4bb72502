use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    Catalog,
    Custom,
}

/// A teaching situation posed to the mentee agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeachingScenario {
    #[serde(default)]
    pub subject: String,
    #[serde(default)]
    pub grade_level: String,
    #[serde(default)]
    pub lesson_topic: String,
    pub scenario_text: String,
    pub source: ScenarioSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("scenario_text is empty")]
    EmptyText,
    #[error("catalog scenario is missing `{0}`")]
    MissingContext(&'static str),
}

impl TeachingScenario {
    pub fn custom(text: impl Into<String>) -> Self {
        Self {
            subject: String::new(),
            grade_level: String::new(),
            lesson_topic: String::new(),
            scenario_text: text.into(),
            source: ScenarioSource::Custom,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.scenario_text.trim().is_empty() {
            return Err(ScenarioError::EmptyText);
        }
        if self.source == ScenarioSource::Catalog {
            for (name, value) in [
                ("subject", &self.subject),
                ("grade_level", &self.grade_level),
                ("lesson_topic", &self.lesson_topic),
            ] {
                if value.trim().is_empty() {
                    return Err(ScenarioError::MissingContext(name));
                }
            }
        }
        Ok(())
    }

    /// Human-readable one-block rendering used inside prompts.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (label, value) in [
            ("Subject", &self.subject),
            ("Grade level", &self.grade_level),
            ("Lesson topic", &self.lesson_topic),
        ] {
            if !value.trim().is_empty() {
                out.push_str(&format!("{label}: {value}\n"));
            }
        }
        out.push_str(&format!("Scenario: {}", self.scenario_text.trim()));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogRecord {
    id: String,
    subject: String,
    grade_level: String,
    lesson_topic: String,
    scenario_text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogDocument {
    scenarios: Vec<CatalogRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub id: String,
    #[serde(flatten)]
    pub scenario: TeachingScenario,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("cannot read scenario catalog: {0}")]
    Io(String),
    #[error("malformed scenario catalog: {0}")]
    Parse(String),
    #[error("duplicate scenario id `{0}`")]
    DuplicateId(String),
    #[error("scenario `{id}` is invalid: {source}")]
    Invalid { id: String, source: ScenarioError },
}

/// Scenario catalog with stable, unique ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ScenarioCatalog {
    pub entries: Vec<CatalogEntry>,
}

impl ScenarioCatalog {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CatalogError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let doc: CatalogDocument =
            serde_json::from_str(text).map_err(|e| CatalogError::Parse(e.to_string()))?;
        let mut entries: Vec<CatalogEntry> = Vec::with_capacity(doc.scenarios.len());
        for r in doc.scenarios {
            if entries.iter().any(|e| e.id == r.id) {
                return Err(CatalogError::DuplicateId(r.id));
            }
            let scenario = TeachingScenario {
                subject: r.subject,
                grade_level: r.grade_level,
                lesson_topic: r.lesson_topic,
                scenario_text: r.scenario_text,
                source: ScenarioSource::Catalog,
            };
            scenario.validate().map_err(|source| CatalogError::Invalid {
                id: r.id.clone(),
                source,
            })?;
            entries.push(CatalogEntry { id: r.id, scenario });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: &str) -> Option<&TeachingScenario> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.scenario)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
