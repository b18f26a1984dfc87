//! Prediction-log data model: records, corpora, and per-domain statistics.
//!
//! A [`PredictionRecord`] is one model prediction from a log; a [`Corpus`]
//! is a validated sequence of them partitioned by domain label. Corpora are
//! immutable after construction and safe to share across parallel readers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::curves::Outcome;

/// Tolerance for probability-vector checks (sum to one, max matches
/// confidence).
pub const PROB_TOLERANCE: f64 = 1e-6;

/// Validation failures for records and corpora.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("record {id}: confidence {value} outside [0, 1]")]
    ConfidenceOutOfRange { id: String, value: f64 },
    #[error("record {id}: probs entry {index} is {value}, outside [0, 1]")]
    ProbOutOfRange {
        id: String,
        index: usize,
        value: f64,
    },
    #[error("record {id}: probs sum to {sum}, expected 1 within {PROB_TOLERANCE}")]
    ProbSumMismatch { id: String, sum: f64 },
    #[error("record {id}: confidence {confidence} does not equal max(probs) = {max_prob}")]
    ConfidenceNotMaxProb {
        id: String,
        confidence: f64,
        max_prob: f64,
    },
    #[error("record {id}: feature dimension {got} differs from corpus dimension {expected}")]
    FeatureDimMismatch {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate record id {id}")]
    DuplicateId { id: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("unknown record id {id}")]
    UnknownId { id: String },
}

/// One model prediction from a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    /// Unique id within the corpus.
    pub id: String,
    /// Domain label the query was drawn from.
    pub domain: String,
    /// The model's confidence in its prediction, in `[0, 1]`.
    pub confidence: f64,
    /// Full class probability vector, if the log carries one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    /// Whether the prediction matched the gold label.
    pub correct: bool,
    /// Feature vector for the query (one fixed dimension per corpus);
    /// required by the recalibrator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<f64>>,
}

impl PredictionRecord {
    /// Checks the single-record invariants: confidence range and, when a
    /// probability vector is present, non-negativity, unit sum, and
    /// agreement between `confidence` and `max(probs)`.
    pub fn validate(&self) -> Result<(), RecordError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(RecordError::ConfidenceOutOfRange {
                id: self.id.clone(),
                value: self.confidence,
            });
        }
        if let Some(probs) = &self.probs {
            for (index, &value) in probs.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(RecordError::ProbOutOfRange {
                        id: self.id.clone(),
                        index,
                        value,
                    });
                }
            }
            let sum: f64 = probs.iter().sum();
            if libm::fabs(sum - 1.0) > PROB_TOLERANCE {
                return Err(RecordError::ProbSumMismatch {
                    id: self.id.clone(),
                    sum,
                });
            }
            let max_prob = probs.iter().copied().fold(0.0, f64::max);
            if libm::fabs(max_prob - self.confidence) > PROB_TOLERANCE {
                return Err(RecordError::ConfidenceNotMaxProb {
                    id: self.id.clone(),
                    confidence: self.confidence,
                    max_prob,
                });
            }
        }
        Ok(())
    }

    pub fn outcome(&self) -> Outcome {
        Outcome::new(self.confidence, self.correct)
    }
}

/// A validated, domain-partitioned prediction log.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<PredictionRecord>,
    domains: BTreeMap<String, Vec<usize>>,
    by_id: BTreeMap<String, usize>,
    feature_dim: Option<usize>,
}

impl Corpus {
    /// Validates the records and builds the domain partition.
    ///
    /// Fails on any per-record invariant violation, on duplicate ids, and on
    /// records whose feature dimension differs from the rest of the corpus.
    /// Record order is preserved.
    pub fn new(records: Vec<PredictionRecord>) -> Result<Self, RecordError> {
        let mut domains: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_id: BTreeMap<String, usize> = BTreeMap::new();
        let mut feature_dim: Option<usize> = None;
        for (i, record) in records.iter().enumerate() {
            record.validate()?;
            if by_id.insert(record.id.clone(), i).is_some() {
                return Err(RecordError::DuplicateId {
                    id: record.id.clone(),
                });
            }
            if let Some(features) = &record.features {
                match feature_dim {
                    None => feature_dim = Some(features.len()),
                    Some(expected) if expected != features.len() => {
                        return Err(RecordError::FeatureDimMismatch {
                            id: record.id.clone(),
                            expected,
                            got: features.len(),
                        });
                    }
                    Some(_) => {}
                }
            }
            domains.entry(record.domain.clone()).or_default().push(i);
        }
        Ok(Self {
            records,
            domains,
            by_id,
            feature_dim,
        })
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Domain labels in sorted order with their record indices.
    pub fn domains(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.domains
    }

    /// Sorted domain labels.
    pub fn domain_labels(&self) -> Vec<String> {
        self.domains.keys().cloned().collect()
    }

    /// Feature dimension shared by all featured records, if any carry
    /// features.
    pub fn feature_dim(&self) -> Option<usize> {
        self.feature_dim
    }

    pub fn get(&self, id: &str) -> Option<&PredictionRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    /// Resolves ids to records, preserving order and multiplicity.
    pub fn records_by_ids<'a, I>(&self, ids: I) -> Result<Vec<&PredictionRecord>, RecordError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        ids.into_iter()
            .map(|id| {
                self.get(id).ok_or_else(|| RecordError::UnknownId {
                    id: String::from(id),
                })
            })
            .collect()
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        self.records.iter().map(PredictionRecord::outcome).collect()
    }

    pub fn domain_outcomes(&self, domain: &str) -> Option<Vec<Outcome>> {
        self.domains
            .get(domain)
            .map(|idx| idx.iter().map(|&i| self.records[i].outcome()).collect())
    }

    /// Splits off the records of `keep` into a new corpus, preserving order.
    pub fn restricted_to(&self, keep: &BTreeSet<String>) -> Result<Corpus, RecordError> {
        let records: Vec<PredictionRecord> = self
            .records
            .iter()
            .filter(|r| keep.contains(&r.domain))
            .cloned()
            .collect();
        Corpus::new(records)
    }
}

/// Per-domain summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainStats {
    pub count: usize,
    pub accuracy: f64,
    pub mean_confidence: f64,
}

/// Corpus-level summary: totals plus one row per domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total: usize,
    pub accuracy: f64,
    pub mean_confidence: f64,
    pub domains: BTreeMap<String, DomainStats>,
}

/// Per-domain counts, accuracy, and mean confidence of a non-empty corpus.
pub fn corpus_stats(corpus: &Corpus) -> Result<CorpusStats, RecordError> {
    if corpus.is_empty() {
        return Err(RecordError::EmptyCorpus);
    }
    let stats_of = |indices: &[usize]| -> DomainStats {
        let count = indices.len();
        let correct = indices
            .iter()
            .filter(|&&i| corpus.records[i].correct)
            .count();
        let conf_sum: f64 = indices.iter().map(|&i| corpus.records[i].confidence).sum();
        DomainStats {
            count,
            accuracy: correct as f64 / count as f64,
            mean_confidence: conf_sum / count as f64,
        }
    };
    let all: Vec<usize> = (0..corpus.len()).collect();
    let overall = stats_of(&all);
    let domains = corpus
        .domains
        .iter()
        .map(|(label, indices)| (label.clone(), stats_of(indices)))
        .collect();
    Ok(CorpusStats {
        total: overall.count,
        accuracy: overall.accuracy,
        mean_confidence: overall.mean_confidence,
        domains,
    })
}
