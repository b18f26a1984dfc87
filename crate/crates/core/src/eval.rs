//! Downstream evaluation: target-precision thresholds, recalibrated ECE,
//! pairwise win rates, and abstention utility.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::curves::{
    self, BinningScheme, CalibrationCurve, ConfidenceTransform, CurveError, Outcome,
    PrecisionVector,
};
use crate::records::PredictionRecord;

/// Step of the threshold-lookup grid.
pub const LOOKUP_GRID_STEP: usize = 1000;

/// Step of the utility grid search.
pub const UTILITY_GRID_STEP: usize = 100;

/// Two ECE values within this absolute distance count as a tie.
pub const WINRATE_TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("slice has no records")]
    EmptySlice,
    #[error("target precision {value} outside (0, 1]")]
    InvalidTarget { value: f64 },
    #[error("abstention cost {value} outside [0, 1]")]
    InvalidCost { value: f64 },
    #[error("per-slice sequences have mismatched lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("record {id} carries no probability vector, required for temperature scaling")]
    MissingProbs { id: String },
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Smallest threshold on a 0.001 grid whose interpolated precision meets the
/// target, or `None` when no grid point qualifies. Smallest-first maximizes
/// recall; `None` counts as a failed slice in reports.
pub fn threshold_for_precision(
    vector: &PrecisionVector,
    target: f64,
) -> Result<Option<f64>, EvalError> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(EvalError::InvalidTarget { value: target });
    }
    for i in 0..=LOOKUP_GRID_STEP {
        let t = i as f64 / LOOKUP_GRID_STEP as f64;
        if vector.interpolate(t) >= target {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Whether the threshold achieves the target precision on the slice, and the
/// recall it retains.
///
/// Success compares the realized precision of the records with confidence
/// `>= t` against the target, with vacuous precision 1.0 when nothing
/// passes. Recall is the fraction of all correct predictions retained above
/// the threshold; it is 0 when no record passes.
pub fn success_and_recall(
    t: f64,
    slice: &[Outcome],
    target: f64,
) -> Result<(bool, f64), EvalError> {
    if slice.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    if !(target > 0.0 && target <= 1.0) {
        return Err(EvalError::InvalidTarget { value: target });
    }
    let retained = slice.iter().filter(|o| o.confidence >= t).count();
    let retained_correct = slice
        .iter()
        .filter(|o| o.confidence >= t && o.correct)
        .count();
    let total_correct = slice.iter().filter(|o| o.correct).count();
    let precision = if retained == 0 {
        1.0
    } else {
        retained_correct as f64 / retained as f64
    };
    let recall = if retained == 0 {
        0.0
    } else if total_correct == 0 {
        1.0
    } else {
        retained_correct as f64 / total_correct as f64
    };
    Ok((precision >= target, recall))
}

/// Mean over the ten thresholds of the squared difference between two
/// precision vectors. Symmetric, and zero exactly when they are equal.
pub fn l2_distance(a: &PrecisionVector, b: &PrecisionVector) -> f64 {
    let total: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    total / a.values().len() as f64
}

/// What a recalibration method produced for a slice.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodOutput {
    /// Raw model confidences, untouched.
    Base,
    /// A predicted precision vector (recalibrator, curve baselines).
    Curve(PrecisionVector),
    /// A fitted temperature.
    Temperature(f64),
}

/// ECE of a slice after applying a method's output.
///
/// Curve methods convert the vector to a calibration curve against the
/// slice's confidences, histogram-bin it, and remap each confidence to its
/// bin value. Temperature methods rescale each record's probability vector.
/// `Base` scores the raw confidences.
pub fn ece_after_recalibration(
    output: &MethodOutput,
    slice: &[&PredictionRecord],
    scheme: BinningScheme,
) -> Result<f64, EvalError> {
    if slice.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    let outcomes: Vec<Outcome> = match output {
        MethodOutput::Base => slice.iter().map(|r| r.outcome()).collect(),
        MethodOutput::Curve(vector) => {
            let confidences: Vec<f64> = slice.iter().map(|r| r.confidence).collect();
            let curve = CalibrationCurve::from_precision_vector(vector, &confidences, scheme)?;
            let transform = ConfidenceTransform::histogram_binning(&curve);
            slice
                .iter()
                .map(|r| {
                    let conf = transform.apply_confidence(r.confidence)?;
                    Ok(Outcome::new(conf, r.correct))
                })
                .collect::<Result<_, CurveError>>()?
        }
        MethodOutput::Temperature(t) => slice
            .iter()
            .map(|r| {
                let probs = r
                    .probs
                    .as_ref()
                    .ok_or_else(|| EvalError::MissingProbs { id: r.id.clone() })?;
                let scaled = curves::apply_temperature(probs, *t)?;
                let conf = scaled.iter().copied().fold(0.0, f64::max);
                Ok(Outcome::new(conf, r.correct))
            })
            .collect::<Result<_, EvalError>>()?,
    };
    Ok(curves::ece(&outcomes, scheme)?)
}

/// Per-slice win/tie/lose percentages of a method against a reference.
///
/// The method wins on a slice when its ECE is below the reference by more
/// than [`WINRATE_TIE_TOLERANCE`]; differences within the tolerance tie.
pub fn pairwise_winrate(reference: &[f64], method: &[f64]) -> Result<(f64, f64, f64), EvalError> {
    if reference.len() != method.len() {
        return Err(EvalError::LengthMismatch {
            left: reference.len(),
            right: method.len(),
        });
    }
    if reference.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    let mut win = 0usize;
    let mut tie = 0usize;
    let mut lose = 0usize;
    for (r, m) in reference.iter().zip(method) {
        if m < &(r - WINRATE_TIE_TOLERANCE) {
            win += 1;
        } else if m > &(r + WINRATE_TIE_TOLERANCE) {
            lose += 1;
        } else {
            tie += 1;
        }
    }
    let n = reference.len() as f64;
    Ok((
        100.0 * win as f64 / n,
        100.0 * tie as f64 / n,
        100.0 * lose as f64 / n,
    ))
}

/// Expected cost of answering above `t` and abstaining below it, estimated
/// from a precision vector: errors above the threshold cost 1 each,
/// abstentions cost `c` each.
fn expected_cost(vector: &PrecisionVector, sorted_confs: &[f64], t: f64, c: f64) -> f64 {
    let n = sorted_confs.len();
    let above = n - sorted_confs.partition_point(|&conf| conf < t);
    (1.0 - vector.interpolate(t)) * above as f64 + c * (n - above) as f64
}

/// Threshold on a 0.01 grid minimizing the expected cost; ties break toward
/// the smaller threshold.
pub fn utility_optimal_threshold(
    vector: &PrecisionVector,
    confidences: &[f64],
    c: f64,
) -> Result<f64, EvalError> {
    if confidences.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(EvalError::InvalidCost { value: c });
    }
    let mut sorted = confidences.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best_t = 0.0;
    let mut best_cost = f64::INFINITY;
    for i in 0..=UTILITY_GRID_STEP {
        let t = i as f64 / UTILITY_GRID_STEP as f64;
        let cost = expected_cost(vector, &sorted, t, c);
        if cost < best_cost {
            best_cost = cost;
            best_t = t;
        }
    }
    Ok(best_t)
}

/// Mean realized utility (negative cost) of abstaining below `t` on a
/// labeled slice: wrong answers above the threshold cost 1, abstentions
/// cost `c`, correct answers are free. Always in `[-1, 0]`.
pub fn realized_utility(t: f64, slice: &[Outcome], c: f64) -> Result<f64, EvalError> {
    if slice.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    if !(0.0..=1.0).contains(&c) {
        return Err(EvalError::InvalidCost { value: c });
    }
    let wrong_above = slice
        .iter()
        .filter(|o| o.confidence >= t && !o.correct)
        .count();
    let abstained = slice.iter().filter(|o| o.confidence < t).count();
    Ok(-(wrong_above as f64 + c * abstained as f64) / slice.len() as f64)
}

// ─── Report schemas ──────────────────────────────────────────────────────────

/// One (method, target) row of a target-precision report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub method: String,
    pub target: f64,
    /// Fraction of slices whose selected threshold achieved the target.
    pub success_rate: f64,
    pub mean_recall: f64,
    /// Mean squared distance between predicted and gold vectors.
    pub mean_l2: f64,
}

/// Target-precision report: success rate, recall, and curve distance per
/// method and target.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub rows: Vec<PrecisionRow>,
}

/// Builds the rows of one method from its per-slice predicted vectors.
pub fn precision_rows(
    method: &str,
    preds: &[PrecisionVector],
    golds: &[PrecisionVector],
    slices: &[Vec<Outcome>],
    targets: &[f64],
) -> Result<Vec<PrecisionRow>, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    if preds.len() != slices.len() {
        return Err(EvalError::LengthMismatch {
            left: preds.len(),
            right: slices.len(),
        });
    }
    if preds.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    let n = preds.len() as f64;
    let mean_l2 = preds
        .iter()
        .zip(golds)
        .map(|(p, g)| l2_distance(p, g))
        .sum::<f64>()
        / n;
    targets
        .iter()
        .map(|&target| {
            let mut successes = 0usize;
            let mut recall_sum = 0.0;
            for (pred, slice) in preds.iter().zip(slices) {
                // A missing threshold counts as a failure with recall 0.
                if let Some(t) = threshold_for_precision(pred, target)? {
                    let (ok, recall) = success_and_recall(t, slice, target)?;
                    if ok {
                        successes += 1;
                    }
                    recall_sum += recall;
                }
            }
            Ok(PrecisionRow {
                method: String::from(method),
                target,
                success_rate: successes as f64 / n,
                mean_recall: recall_sum / n,
                mean_l2,
            })
        })
        .collect()
}

/// One method row of an ECE report; win/tie/lose are against the reference
/// method and absent on the reference's own row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceRow {
    pub method: String,
    pub mean_ece: f64,
    pub win_pct: Option<f64>,
    pub tie_pct: Option<f64>,
    pub lose_pct: Option<f64>,
}

/// ECE report: mean recalibrated ECE per method plus pairwise comparisons
/// against a reference method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EceReport {
    pub reference: String,
    pub rows: Vec<EceRow>,
}

/// Summarizes one method's per-slice ECEs, pairing it against the reference
/// when given.
pub fn ece_row(method: &str, eces: &[f64], reference: Option<&[f64]>) -> Result<EceRow, EvalError> {
    if eces.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    let mean_ece = eces.iter().sum::<f64>() / eces.len() as f64;
    let (win_pct, tie_pct, lose_pct) = match reference {
        Some(ref_eces) => {
            let (w, t, l) = pairwise_winrate(ref_eces, eces)?;
            (Some(w), Some(t), Some(l))
        }
        None => (None, None, None),
    };
    Ok(EceRow {
        method: String::from(method),
        mean_ece,
        win_pct,
        tie_pct,
        lose_pct,
    })
}

/// One (method, cost) row of a utility report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    pub method: String,
    pub cost: f64,
    pub mean_utility: f64,
    pub win_pct: Option<f64>,
    pub tie_pct: Option<f64>,
    pub lose_pct: Option<f64>,
}

/// Abstention-utility report across methods and cost settings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UtilityReport {
    pub rows: Vec<UtilityRow>,
}

/// Summarizes one method's per-slice realized utilities at one cost.
pub fn utility_row(
    method: &str,
    cost: f64,
    utilities: &[f64],
    reference: Option<&[f64]>,
) -> Result<UtilityRow, EvalError> {
    if utilities.is_empty() {
        return Err(EvalError::EmptySlice);
    }
    let mean_utility = utilities.iter().sum::<f64>() / utilities.len() as f64;
    let (win_pct, tie_pct, lose_pct) = match reference {
        Some(ref_utils) => {
            // Higher utility is better, so compare negated values.
            let neg_ref: Vec<f64> = ref_utils.iter().map(|u| -u).collect();
            let neg: Vec<f64> = utilities.iter().map(|u| -u).collect();
            let (w, t, l) = pairwise_winrate(&neg_ref, &neg)?;
            (Some(w), Some(t), Some(l))
        }
        None => (None, None, None),
    };
    Ok(UtilityRow {
        method: String::from(method),
        cost,
        mean_utility,
        win_pct,
        tie_pct,
        lose_pct,
    })
}
