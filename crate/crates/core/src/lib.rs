//! Engine for a teachable mentee agent that proposes instructional gestures
//! for teaching scenarios and learns from groups of teachers through a
//! four-stage mentoring loop.

pub mod agents;
pub mod engine;
pub mod fixtures;
mod hashing;
pub mod knowledge;
pub mod llm;
pub mod retrieval;
pub mod scenario;
pub mod session;

pub use engine::Engine;
pub use knowledge::KnowledgeBase;
pub use scenario::{ScenarioCatalog, TeachingScenario};
