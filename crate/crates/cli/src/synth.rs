//! Deterministic synthetic prediction logs.
//!
//! Three generators cover the toolkit's demo and verification needs:
//!
//! - [`benchmark_corpus`]: ten one-hot-featured domains with distinct
//!   confidence profiles and distinct over-/under-confidence offsets, for
//!   end-to-end recalibration runs. Confidences sit on the interpolation
//!   anchors, correctness counts are exact per (domain, level) cell, and
//!   every record carries a 4-class probability vector.
//! - [`illusion_corpus`]: two domains miscalibrated by +0.15 and -0.15 at
//!   identical confidence levels, so the pooled log looks perfectly
//!   calibrated while each domain is badly off.
//! - [`calibrated_levels_corpus`]: a log whose accuracy exactly matches its
//!   confidence at every level, useful as a temperature-scaling fixture via
//!   [`distort_with_temperature`].
//!
//! All generators are pure functions of their arguments, with no RNG, so
//! the corpora are bit-identical across runs and platforms.

use slicecal_core::curves::{self, CurveError};
use slicecal_core::records::{Corpus, PredictionRecord};

/// Confidence levels used by the benchmark corpus (a subset of the anchor
/// thresholds, so slice step curves change only at anchors).
pub const BENCHMARK_LEVELS: [f64; 8] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Per-domain accuracy offsets below full confidence: accuracy at confidence
/// `c < 1` is `clamp(c + offset, 0.03, 0.97)`. Negative offsets are
/// over-confident domains, positive ones under-confident; pooled they
/// cancel.
pub const BENCHMARK_OFFSETS: [f64; 10] = [
    -0.25, 0.20, -0.20, 0.15, -0.15, 0.10, -0.10, 0.05, -0.05, 0.25,
];

/// Number of answer classes in synthetic probability vectors.
const NUM_CLASSES: usize = 4;

fn probs_for(confidence: f64) -> Vec<f64> {
    // Full-confidence records keep strictly positive tail probabilities
    // (within the confidence/probs tolerance) so log-domain rescaling never
    // has to floor a zero.
    let head = confidence.min(1.0 - 3e-7);
    let rest = (1.0 - head) / (NUM_CLASSES - 1) as f64;
    let mut probs = vec![rest; NUM_CLASSES];
    probs[0] = head;
    probs
}

fn exact_cell(
    domain: &str,
    features: Option<Vec<f64>>,
    confidence: f64,
    count: usize,
    correct: usize,
    with_probs: bool,
    records: &mut Vec<PredictionRecord>,
) {
    for i in 0..count {
        records.push(PredictionRecord {
            id: format!("{domain}-c{:03}-{i}", (confidence * 100.0).round() as usize),
            domain: domain.to_string(),
            confidence,
            probs: with_probs.then(|| probs_for(confidence)),
            correct: i < correct,
            features: features.clone(),
        });
    }
}

/// Ten-domain benchmark corpus with `per_domain` records per domain.
///
/// Domain `j` carries the one-hot feature `e_j`, concentrates its confidence
/// mass around a domain-specific level, and is miscalibrated below full
/// confidence by [`BENCHMARK_OFFSETS`]`[j]`. Full-confidence records are
/// always correct, so every slice's precision curve reaches 1.0 at the top
/// threshold and a target-precision lookup on the true curve always finds a
/// threshold. Within each (domain, level) cell the number of correct
/// records is exact, so domain curves are stable at any size.
pub fn benchmark_corpus(per_domain: usize) -> Corpus {
    let num_levels = BENCHMARK_LEVELS.len();
    let mut records = Vec::new();
    for (j, &offset) in BENCHMARK_OFFSETS.iter().enumerate() {
        let domain = format!("domain{j}");
        let mut one_hot = vec![0.0; BENCHMARK_OFFSETS.len()];
        one_hot[j] = 1.0;

        // Discretized bell over the levels, peaked per domain, with a floor
        // so every (domain, level) cell is populated.
        let peak = j as f64 * (num_levels - 1) as f64 / (BENCHMARK_OFFSETS.len() - 1) as f64;
        let raw: Vec<f64> = (0..num_levels)
            .map(|l| (-((l as f64 - peak) / 1.5).powi(2)).exp() + 0.05)
            .collect();
        let total: f64 = raw.iter().sum();

        let mut remaining = per_domain;
        for (l, &level) in BENCHMARK_LEVELS.iter().enumerate() {
            let count = if l == num_levels - 1 {
                remaining
            } else {
                (((raw[l] / total) * per_domain as f64).round() as usize).min(remaining)
            };
            remaining -= count;
            let accuracy = if level == 1.0 {
                1.0
            } else {
                (level + offset).clamp(0.03, 0.97)
            };
            let correct = (accuracy * count as f64).round() as usize;
            exact_cell(
                &domain,
                Some(one_hot.clone()),
                level,
                count,
                correct,
                true,
                &mut records,
            );
        }
    }
    Corpus::new(records).expect("benchmark corpus is valid by construction")
}

/// Levels used by the illusion corpus.
pub const ILLUSION_LEVELS: [f64; 13] = [
    0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85,
];

/// Miscalibration magnitude of each illusion domain.
pub const ILLUSION_OFFSET: f64 = 0.15;

/// Two-domain corpus where `overconfident` runs `ILLUSION_OFFSET` below its
/// confidence and `underconfident` the same amount above, with equal counts
/// at identical levels. Pooled, the errors cancel exactly; per domain they
/// do not.
pub fn illusion_corpus(per_level: usize) -> Corpus {
    let mut records = Vec::new();
    for (name, sign, feature) in [
        ("overconfident", -1.0, vec![1.0, 0.0]),
        ("underconfident", 1.0, vec![0.0, 1.0]),
    ] {
        for &level in &ILLUSION_LEVELS {
            let accuracy = level + sign * ILLUSION_OFFSET;
            let correct = (accuracy * per_level as f64).round() as usize;
            exact_cell(
                name,
                Some(feature.clone()),
                level,
                per_level,
                correct,
                false,
                &mut records,
            );
        }
    }
    Corpus::new(records).expect("illusion corpus is valid by construction")
}

/// Levels used by the calibrated corpus.
pub const CALIBRATED_LEVELS: [f64; 14] = [
    0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95,
];

/// Single-domain corpus whose accuracy equals its confidence exactly at
/// every level: at level `c`, exactly `c * per_level` of the records are
/// correct (choose `per_level` divisible by 20 to keep the counts integral).
/// Every record carries a probability vector, so the corpus doubles as a
/// temperature-scaling fixture.
pub fn calibrated_levels_corpus(per_level: usize) -> Corpus {
    let mut records = Vec::new();
    for &level in &CALIBRATED_LEVELS {
        let correct = (level * per_level as f64).round() as usize;
        exact_cell(
            "calibrated",
            None,
            level,
            per_level,
            correct,
            true,
            &mut records,
        );
    }
    Corpus::new(records).expect("calibrated corpus is valid by construction")
}

/// Rescales every record's probability vector by the given temperature,
/// updating its confidence to the new maximum. Correctness, domains, ids,
/// and features are untouched. Fails if any record lacks probabilities.
pub fn distort_with_temperature(corpus: &Corpus, t: f64) -> Result<Corpus, CurveError> {
    let records: Result<Vec<PredictionRecord>, CurveError> = corpus
        .records()
        .iter()
        .map(|r| {
            let probs = r.probs.as_ref().ok_or(CurveError::MissingProbs)?;
            let scaled = curves::apply_temperature(probs, t)?;
            let confidence = scaled.iter().copied().fold(0.0, f64::max);
            Ok(PredictionRecord {
                id: r.id.clone(),
                domain: r.domain.clone(),
                confidence,
                probs: Some(scaled),
                correct: r.correct,
                features: r.features.clone(),
            })
        })
        .collect();
    Ok(Corpus::new(records?).expect("temperature rescaling preserves record invariants"))
}
