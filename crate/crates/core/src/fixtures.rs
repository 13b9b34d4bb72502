//! Bundled fixture documents, so the engine and demo run without external files.

/// The canonical knowledge base: full taxonomies plus the authored exemplar corpus.
pub const CANONICAL_KB: &str = include_str!("../fixtures/kb.good.json");

/// The canonical knowledge base with the `role_modeling` intention removed.
pub const KB_MISSING_ROLE_MODELING: &str = include_str!("../fixtures/kb.missing-role-modeling.json");

/// Catalog of teaching scenarios offered in the question-posing stage.
pub const SCENARIO_CATALOG: &str = include_str!("../fixtures/scenarios.json");
