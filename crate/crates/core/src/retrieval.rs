//! Exemplar retrieval: embed text, index the exemplar corpus, and pick the
//! single most similar exemplar by cosine similarity.
//!
//! The index is a linear scan. The corpus is small and exactness keeps the
//! result checkable against a brute-force scan.

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hashing::digest_parts;
use crate::knowledge::KnowledgeBase;
use crate::llm::ProviderError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("text to embed is empty")]
    EmptyText,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("embedding contains a non-finite component")]
    NonFinite,
    #[error("exemplar id {0} appears twice in the index")]
    DuplicateId(u32),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl RetrievalError {
    pub fn code(&self) -> &'static str {
        match self {
            RetrievalError::EmptyText => "EmptyText",
            RetrievalError::DimensionMismatch { .. } => "DimensionMismatch",
            RetrievalError::ZeroVector => "ZeroVector",
            RetrievalError::NonFinite => "NonFinite",
            RetrievalError::DuplicateId(_) => "DuplicateId",
            RetrievalError::Provider(_) => "ProviderError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, RetrievalError> {
        if values.is_empty() {
            return Err(RetrievalError::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RetrievalError::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[async_trait]
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

#[async_trait]
impl<T: Embedder + ?Sized> Embedder for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        (**self).embed(text).await
    }
}

/// Deterministic embedder: a seeded hash of the text expanded into a
/// direction and normalized to unit length.
///
/// Component `i` comes from block `i / 4` of
/// `SHA-256(seed ‖ dim ‖ block ‖ text)` (length-prefixed parts), read as
/// little-endian `u64` words; the top 53 bits of each word map to `[-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StubEmbedder {
    pub seed: u64,
    pub dim: usize,
}

impl StubEmbedder {
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { seed, dim }
    }

    pub fn vector(&self, text: &str) -> Vec<f64> {
        let seed = self.seed.to_le_bytes();
        let dim = (self.dim as u64).to_le_bytes();
        let mut raw = Vec::with_capacity(self.dim);
        let mut block = 0u64;
        while raw.len() < self.dim {
            let digest = digest_parts(&[&seed, &dim, &block.to_le_bytes(), text.as_bytes()]);
            for word in digest.chunks_exact(8) {
                if raw.len() == self.dim {
                    break;
                }
                let bits = u64::from_le_bytes(word.try_into().expect("8-byte chunk")) >> 11;
                raw.push(bits as f64 / (1u64 << 53) as f64 * 2.0 - 1.0);
            }
            block += 1;
        }
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            raw[0] = 1.0;
            return raw;
        }
        raw.iter().map(|v| v / norm).collect()
    }
}

#[async_trait]
impl Embedder for StubEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    async fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        Ok(self.vector(text))
    }
}

pub async fn embed_text(embedder: &dyn Embedder, text: &str) -> Result<EmbeddingVector, RetrievalError> {
    if text.trim().is_empty() {
        return Err(RetrievalError::EmptyText);
    }
    let values = embedder.embed(text).await?;
    if values.len() != embedder.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: embedder.dim(),
            actual: values.len(),
        });
    }
    EmbeddingVector::new(values)
}

/// `dot(a, b) / (|a| |b|)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, RetrievalError> {
    if a.dim() != b.dim() {
        return Err(RetrievalError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(RetrievalError::ZeroVector);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub exemplar_id: u32,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarIndex {
    dim: usize,
    entries: Vec<(u32, EmbeddingVector)>,
}

impl ExemplarIndex {
    /// Builds an index from precomputed vectors. Ids must be unique and all
    /// vectors share `dim`.
    pub fn from_entries(dim: usize, entries: Vec<(u32, EmbeddingVector)>) -> Result<Self, RetrievalError> {
        let mut seen = std::collections::HashSet::new();
        for (id, v) in &entries {
            if v.dim() != dim {
                return Err(RetrievalError::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
            if !seen.insert(*id) {
                return Err(RetrievalError::DuplicateId(*id));
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u32, EmbeddingVector)] {
        &self.entries
    }

    /// Highest cosine score; ties go to the lowest exemplar id. Stored
    /// zero vectors never match.
    pub fn retrieve_most_similar(&self, query: &EmbeddingVector) -> Result<Option<RetrievalHit>, RetrievalError> {
        if self.entries.is_empty() {
            return Ok(None);
        }
        if query.dim() != self.dim {
            return Err(RetrievalError::DimensionMismatch {
                expected: self.dim,
                actual: query.dim(),
            });
        }
        let mut best: Option<RetrievalHit> = None;
        for (id, vector) in &self.entries {
            let score = match cosine_similarity(query, vector) {
                Ok(s) => s,
                Err(RetrievalError::ZeroVector) if query.norm() > 0.0 => continue,
                Err(e) => return Err(e),
            };
            let better = match best {
                None => true,
                Some(b) => score > b.score || (score == b.score && *id < b.exemplar_id),
            };
            if better {
                best = Some(RetrievalHit {
                    exemplar_id: *id,
                    score,
                });
            }
        }
        Ok(best)
    }
}

/// Embeds every exemplar's scenario text. All-or-nothing.
pub async fn build_index(kb: &KnowledgeBase, embedder: &dyn Embedder) -> Result<ExemplarIndex, RetrievalError> {
    let mut entries = Vec::with_capacity(kb.exemplars().len());
    for exemplar in kb.exemplars() {
        entries.push((exemplar.id, embed_text(embedder, &exemplar.scenario_text).await?));
    }
    ExemplarIndex::from_entries(embedder.dim(), entries)
}

/// Retrieval query for one intention: the scenario text followed by the
/// intention's description, so exemplars serving the same purpose rank higher.
pub fn compose_query(scenario_text: &str, intention_description: &str) -> String {
    format!("{}\n{}", scenario_text.trim(), intention_description.trim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn v(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[tokio::test]
    async fn stub_is_deterministic() {
        let e = StubEmbedder::new(42, 16);
        let a = embed_text(&e, "abc").await.unwrap();
        let b = embed_text(&e, "abc").await.unwrap();
        assert_eq!(a, b);
        assert_ne!(a, embed_text(&e, "abd").await.unwrap());
        assert_ne!(a, embed_text(&StubEmbedder::new(43, 16), "abc").await.unwrap());
    }

    #[tokio::test]
    async fn stub_has_unit_norm() {
        let e = StubEmbedder::new(0, 64);
        for text in ["a", "The leaves gently fell down.", "数学"] {
            let vec = embed_text(&e, text).await.unwrap();
            assert_eq!(vec.dim(), 64);
            assert!((vec.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[tokio::test]
    async fn empty_text_rejected() {
        let e = StubEmbedder::new(0, 8);
        assert_eq!(embed_text(&e, "").await, Err(RetrievalError::EmptyText));
        assert_eq!(embed_text(&e, " \n").await, Err(RetrievalError::EmptyText));
    }

    #[test]
    fn cosine_examples() {
        let a = v(&[0.3, -2.0, 5.0]);
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&v(&[1.0, 0.0]), &v(&[-1.0, 0.0])).unwrap(), -1.0);
    }

    #[test]
    fn cosine_errors() {
        assert_eq!(
            cosine_similarity(&v(&[1.0]), &v(&[1.0, 0.0])),
            Err(RetrievalError::DimensionMismatch { expected: 1, actual: 2 })
        );
        assert_eq!(
            cosine_similarity(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])),
            Err(RetrievalError::ZeroVector)
        );
        assert_eq!(EmbeddingVector::new(vec![f64::NAN]), Err(RetrievalError::NonFinite));
    }

    #[tokio::test]
    async fn index_over_fixture() {
        let kb = KnowledgeBase::from_json(fixtures::CANONICAL_KB).unwrap();
        let e = StubEmbedder::new(1, 32);
        let index = build_index(&kb, &e).await.unwrap();
        assert_eq!(index.len(), kb.exemplars().len());
        let ids: Vec<u32> = index.entries().iter().map(|(id, _)| *id).collect();
        let expected: Vec<u32> = kb.exemplars().iter().map(|x| x.id).collect();
        assert_eq!(ids, expected);
        assert_eq!(index, build_index(&kb, &e).await.unwrap());

        // An exemplar's own text retrieves itself.
        let q = embed_text(&e, &kb.exemplars()[5].scenario_text).await.unwrap();
        let hit = index.retrieve_most_similar(&q).unwrap().unwrap();
        assert_eq!(hit.exemplar_id, kb.exemplars()[5].id);
        assert!((hit.score - 1.0).abs() < 1e-12);
    }

    #[tokio::test]
    async fn empty_corpus_index() {
        let mut doc = crate::knowledge::KbDocument::from_json(fixtures::CANONICAL_KB).unwrap();
        doc.exemplars.clear();
        let kb = KnowledgeBase::from_document(doc).unwrap();
        let index = build_index(&kb, &StubEmbedder::new(0, 8)).await.unwrap();
        assert!(index.is_empty());
        assert_eq!(index.retrieve_most_similar(&v(&[1.0; 8])).unwrap(), None);
        // Any dim is accepted against an empty index.
        assert_eq!(index.retrieve_most_similar(&v(&[1.0; 3])).unwrap(), None);
    }

    #[test]
    fn tie_goes_to_lowest_id() {
        let index = ExemplarIndex::from_entries(2, vec![(7, v(&[1.0, 1.0])), (3, v(&[1.0, 1.0]))]).unwrap();
        let hit = index.retrieve_most_similar(&v(&[0.5, 0.2])).unwrap().unwrap();
        assert_eq!(hit.exemplar_id, 3);
    }

    #[test]
    fn query_dimension_checked() {
        let index = ExemplarIndex::from_entries(2, vec![(0, v(&[1.0, 0.0]))]).unwrap();
        assert!(matches!(
            index.retrieve_most_similar(&v(&[1.0, 0.0, 0.0])),
            Err(RetrievalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn query_composition() {
        assert_eq!(compose_query(" leaves fall ", "explain"), "leaves fall\nexplain");
    }
}
