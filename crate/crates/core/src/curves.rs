//! Precision curves, calibration curves, ECE, and confidence transforms.
//!
//! The central object is the *precision curve*: for a set of scored
//! predictions it maps a confidence threshold `t` to the precision of the
//! predictions with confidence `>= t`. Unlike a calibration curve it has no
//! binning hyperparameters, and given the multiset of confidence scores it
//! can be converted into a calibration curve under any binning scheme
//! ([`CalibrationCurve::from_precision_vector`]).
//!
//! Threshold comparisons are `>=` everywhere (curve construction, counts in
//! the conversion formula, and threshold application), so the pieces agree at
//! ties. When no prediction clears a threshold the precision is defined as
//! 1.0: there are zero errors above it, and threshold selection breaks ties
//! toward lower thresholds, so the convention never inflates a lookup.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

/// Errors from curve construction and confidence transforms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("operation requires at least one record")]
    EmptyInput,
    #[error("equal-mass binning needs at least {bins} records, got {records}")]
    TooFewRecords { records: usize, bins: usize },
    #[error("number of bins must be at least 1")]
    InvalidBinCount,
    #[error("temperature must be positive and finite, got {value}")]
    InvalidTemperature { value: f64 },
    #[error("probability vector entry {index} is {value}, outside [0, 1]")]
    InvalidProbability { index: usize, value: f64 },
    #[error("precision value at threshold index {index} is {value}, outside [0, 1]")]
    InvalidPrecision { index: usize, value: f64 },
    #[error("record has no class probability vector")]
    MissingProbs,
}

/// One scored prediction: the model's confidence and whether it was right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub confidence: f64,
    pub correct: bool,
}

impl Outcome {
    pub fn new(confidence: f64, correct: bool) -> Self {
        Self {
            confidence,
            correct,
        }
    }
}

/// The ten thresholds at which precision curves are sampled and predicted.
pub const ANCHORS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Grid searched by [`fit_temperature`].
pub const TEMPERATURE_GRID: [f64; 23] = [
    0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9,
    2.0, 3.0, 4.0, 5.0,
];

// ─── Precision curves ────────────────────────────────────────────────────────

/// Exact step-function precision curve of a prediction set.
///
/// Breakpoints are the distinct confidence values in descending order;
/// `cum_count[i]` and `cum_correct[i]` count the predictions (and correct
/// predictions) with confidence `>= breakpoints[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCurve {
    breakpoints: Vec<f64>,
    cum_count: Vec<usize>,
    cum_correct: Vec<usize>,
}

impl PrecisionCurve {
    /// Builds the exact precision curve of a non-empty prediction set.
    pub fn from_outcomes(outcomes: &[Outcome]) -> Result<Self, CurveError> {
        if outcomes.is_empty() {
            return Err(CurveError::EmptyInput);
        }
        let mut sorted: Vec<Outcome> = outcomes.to_vec();
        sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));

        let mut breakpoints = Vec::new();
        let mut cum_count = Vec::new();
        let mut cum_correct = Vec::new();
        let mut count = 0usize;
        let mut correct = 0usize;
        let mut i = 0;
        while i < sorted.len() {
            let conf = sorted[i].confidence;
            while i < sorted.len() && sorted[i].confidence == conf {
                count += 1;
                if sorted[i].correct {
                    correct += 1;
                }
                i += 1;
            }
            breakpoints.push(conf);
            cum_count.push(count);
            cum_correct.push(correct);
        }
        Ok(Self {
            breakpoints,
            cum_count,
            cum_correct,
        })
    }

    /// Precision of the predictions with confidence `>= t`; 1.0 if there are
    /// none (zero errors above the threshold).
    pub fn precision_at(&self, t: f64) -> f64 {
        match self.group_index(t) {
            Some(i) => self.cum_correct[i] as f64 / self.cum_count[i] as f64,
            None => 1.0,
        }
    }

    /// Number of predictions with confidence `>= t`.
    pub fn count_at(&self, t: f64) -> usize {
        match self.group_index(t) {
            Some(i) => self.cum_count[i],
            None => 0,
        }
    }

    /// Index of the deepest breakpoint still `>= t`, if any.
    fn group_index(&self, t: f64) -> Option<usize> {
        // Breakpoints are descending, so the prefix `>= t` is contiguous.
        let n = self.breakpoints.partition_point(|&bp| bp >= t);
        n.checked_sub(1)
    }

    /// Distinct confidence values, descending.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `(threshold, precision)` pairs at each breakpoint, descending.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(i, &bp)| (bp, self.cum_correct[i] as f64 / self.cum_count[i] as f64))
    }

    /// Samples the curve at the ten anchor thresholds.
    pub fn sample_vector(&self) -> PrecisionVector {
        let mut values = [0.0; 10];
        for (i, &t) in ANCHORS.iter().enumerate() {
            values[i] = self.precision_at(t);
        }
        PrecisionVector::new(values).expect("step precision is always in [0, 1]")
    }
}

/// Precision at the ten anchor thresholds `0.1, 0.2, ..., 1.0`.
///
/// This is the recalibrator's prediction target; the full curve is recovered
/// by linear interpolation between anchors ([`PrecisionVector::interpolate`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrecisionVector {
    values: [f64; 10],
}

impl PrecisionVector {
    pub fn new(values: [f64; 10]) -> Result<Self, CurveError> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(CurveError::InvalidPrecision { index, value });
            }
        }
        Ok(Self { values })
    }

    /// All ten values share one constant; handy for tests and edge cases.
    pub fn constant(value: f64) -> Result<Self, CurveError> {
        Self::new([value; 10])
    }

    pub fn values(&self) -> &[f64; 10] {
        &self.values
    }

    /// Piecewise-linear interpolation between the anchors.
    ///
    /// Below the first anchor the curve extends as the constant `values[0]`;
    /// at an anchor the stored value is returned exactly.
    ///
    /// # Panics
    ///
    /// Panics if `t` is outside `[0, 1]`.
    pub fn interpolate(&self, t: f64) -> f64 {
        assert!(
            (0.0..=1.0).contains(&t),
            "interpolation point {t} outside [0, 1]"
        );
        if t <= ANCHORS[0] {
            return self.values[0];
        }
        // Last anchor with value <= t; t > 0.1 so j >= 0.
        let j = ANCHORS.partition_point(|&a| a <= t) - 1;
        if ANCHORS[j] == t || j == ANCHORS.len() - 1 {
            return self.values[j];
        }
        let (a0, a1) = (ANCHORS[j], ANCHORS[j + 1]);
        let w = (t - a0) / (a1 - a0);
        self.values[j] + w * (self.values[j + 1] - self.values[j])
    }
}

// ─── Binning ─────────────────────────────────────────────────────────────────

/// How confidence scores are grouped into bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinMode {
    /// Bins hold (as close as possible to) equal numbers of predictions.
    EqualMass,
    /// Bins are equal-width intervals of `[0, 1]`.
    EqualWidth,
}

/// A binning design: mode plus bin count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinningScheme {
    pub mode: BinMode,
    pub num_bins: usize,
}

impl BinningScheme {
    pub fn new(mode: BinMode, num_bins: usize) -> Result<Self, CurveError> {
        if num_bins == 0 {
            return Err(CurveError::InvalidBinCount);
        }
        Ok(Self { mode, num_bins })
    }

    pub fn equal_mass(num_bins: usize) -> Result<Self, CurveError> {
        Self::new(BinMode::EqualMass, num_bins)
    }

    pub fn equal_width(num_bins: usize) -> Result<Self, CurveError> {
        Self::new(BinMode::EqualWidth, num_bins)
    }
}

impl Default for BinningScheme {
    /// Ten equal-mass bins.
    fn default() -> Self {
        Self {
            mode: BinMode::EqualMass,
            num_bins: 10,
        }
    }
}

/// One bin of a calibration curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    /// Inclusive lower confidence bound.
    pub lower: f64,
    /// Exclusive upper confidence bound (inclusive for the last bin).
    pub upper: f64,
    pub count: usize,
    pub mean_confidence: f64,
    pub accuracy: f64,
}

/// Accuracy as a function of binned confidence (a reliability diagram).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    bins: Vec<CalibrationBin>,
}

/// Half-open index range of one bin in the ascending-sorted sample.
struct BinSpan {
    lower: f64,
    upper: f64,
    start: usize,
    end: usize,
}

/// Splits ascending-sorted confidences into bins.
///
/// Equal-width always yields `num_bins` spans (some possibly empty). For
/// equal-mass the target cut positions are advanced past runs of equal
/// confidences so a tie group is never split across bins; cuts that collide
/// are merged, so up to `num_bins` non-empty spans come back. Keeping tie
/// groups whole is what lets histogram binning drive same-data ECE to zero
/// even when the remapped confidences collide.
///
/// Bin edges of equal-mass bins sit *on* the smallest member confidence
/// (first bin starts at 0.0, last bin ends at 1.0), so `count(edge)` under
/// the `>=` convention is exactly the number of members at or above it.
fn partition(sorted: &[f64], scheme: BinningScheme) -> Result<Vec<BinSpan>, CurveError> {
    if scheme.num_bins == 0 {
        return Err(CurveError::InvalidBinCount);
    }
    let n = sorted.len();
    if n == 0 {
        return Err(CurveError::EmptyInput);
    }
    let m = scheme.num_bins;
    let mut spans = Vec::with_capacity(m);
    match scheme.mode {
        BinMode::EqualMass => {
            if m > n {
                return Err(CurveError::TooFewRecords {
                    records: n,
                    bins: m,
                });
            }
            let mut cuts = vec![0usize];
            for i in 1..m {
                let mut pos = i * n / m;
                while pos < n && sorted[pos] == sorted[pos - 1] {
                    pos += 1;
                }
                if pos > *cuts.last().unwrap() && pos < n {
                    cuts.push(pos);
                }
            }
            cuts.push(n);
            for w in cuts.windows(2) {
                let (start, end) = (w[0], w[1]);
                let lower = if start == 0 { 0.0 } else { sorted[start] };
                let upper = if end == n { 1.0 } else { sorted[end] };
                spans.push(BinSpan {
                    lower,
                    upper,
                    start,
                    end,
                });
            }
        }
        BinMode::EqualWidth => {
            let mut start = 0usize;
            for i in 0..m {
                let lower = i as f64 / m as f64;
                let upper = (i + 1) as f64 / m as f64;
                let end = if i == m - 1 {
                    n
                } else {
                    start + sorted[start..].partition_point(|&c| c < upper)
                };
                spans.push(BinSpan {
                    lower,
                    upper,
                    start,
                    end,
                });
                start = end;
            }
        }
    }
    Ok(spans)
}

/// Number of values `>= t` in an ascending-sorted slice.
fn count_ge(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&c| c < t)
}

impl CalibrationCurve {
    /// Bins predictions by confidence and records per-bin mean confidence and
    /// accuracy.
    ///
    /// Empty bins (possible in equal-width mode) are kept with `count = 0`
    /// and mean confidence and accuracy both set to the bin midpoint; they
    /// contribute nothing to ECE and are dropped from plots.
    pub fn from_outcomes(outcomes: &[Outcome], scheme: BinningScheme) -> Result<Self, CurveError> {
        if outcomes.is_empty() {
            return Err(CurveError::EmptyInput);
        }
        let mut sorted: Vec<Outcome> = outcomes.to_vec();
        sorted.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
        let confs: Vec<f64> = sorted.iter().map(|o| o.confidence).collect();
        let spans = partition(&confs, scheme)?;

        let bins = spans
            .iter()
            .map(|span| {
                let members = &sorted[span.start..span.end];
                let count = members.len();
                let (mean_confidence, accuracy) = if count == 0 {
                    let mid = 0.5 * (span.lower + span.upper);
                    (mid, mid)
                } else {
                    let conf_sum: f64 = members.iter().map(|o| o.confidence).sum();
                    let correct = members.iter().filter(|o| o.correct).count();
                    (conf_sum / count as f64, correct as f64 / count as f64)
                };
                CalibrationBin {
                    lower: span.lower,
                    upper: span.upper,
                    count,
                    mean_confidence,
                    accuracy,
                }
            })
            .collect();
        Ok(Self { bins })
    }

    /// Converts a sampled precision curve back into a calibration curve,
    /// given the multiset of confidence scores it will be applied to.
    ///
    /// For bin `B = [l, r)` with `count(a)` = number of confidences `>= a`
    /// and `f` the interpolated precision curve, the bin accuracy is
    ///
    /// ```text
    /// acc(B) = (f(l)·count(l) − f(r)·count(r)) / (count(l) − count(r))
    /// ```
    ///
    /// clamped to `[0, 1]`; the top bin's `count(r)` term is zero since
    /// nothing lies above it. Degenerate bins with `count(l) = count(r)`
    /// fall back to the interpolated precision at the bin's mean confidence.
    pub fn from_precision_vector(
        vector: &PrecisionVector,
        confidences: &[f64],
        scheme: BinningScheme,
    ) -> Result<Self, CurveError> {
        if confidences.is_empty() {
            return Err(CurveError::EmptyInput);
        }
        let mut sorted = confidences.to_vec();
        sorted.sort_by(f64::total_cmp);
        let spans = partition(&sorted, scheme)?;
        let last = spans.len() - 1;

        let bins = spans
            .iter()
            .enumerate()
            .map(|(i, span)| {
                let members = &sorted[span.start..span.end];
                let count = members.len();
                let mean_confidence = if count == 0 {
                    0.5 * (span.lower + span.upper)
                } else {
                    members.iter().sum::<f64>() / count as f64
                };
                let count_l = count_ge(&sorted, span.lower);
                let count_r = if i == last {
                    0
                } else {
                    count_ge(&sorted, span.upper)
                };
                debug_assert_eq!(count_l - count_r, count);
                let accuracy = if count_l > count_r {
                    let upper_term = if i == last {
                        0.0
                    } else {
                        vector.interpolate(span.upper) * count_r as f64
                    };
                    let raw = (vector.interpolate(span.lower) * count_l as f64 - upper_term)
                        / (count_l - count_r) as f64;
                    raw.clamp(0.0, 1.0)
                } else {
                    vector.interpolate(mean_confidence)
                };
                CalibrationBin {
                    lower: span.lower,
                    upper: span.upper,
                    count,
                    mean_confidence,
                    accuracy,
                }
            })
            .collect();
        Ok(Self { bins })
    }

    pub fn bins(&self) -> &[CalibrationBin] {
        &self.bins
    }

    /// Total number of predictions across bins.
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Expected calibration error of this curve.
    pub fn ece(&self) -> f64 {
        let n = self.total_count() as f64;
        self.bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| (b.count as f64 / n) * math::abs(b.mean_confidence - b.accuracy))
            .sum()
    }
}

/// Expected calibration error: bin-weighted mean absolute gap between mean
/// confidence and accuracy. Empty bins contribute zero.
pub fn ece(outcomes: &[Outcome], scheme: BinningScheme) -> Result<f64, CurveError> {
    Ok(CalibrationCurve::from_outcomes(outcomes, scheme)?.ece())
}

// ─── Confidence transforms ───────────────────────────────────────────────────

/// Replacement value for confidences falling in one bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRemap {
    pub lower: f64,
    pub upper: f64,
    pub value: f64,
}

/// A monotone-application mapping from raw to recalibrated confidence.
///
/// Transforms adjust confidence only; they never change the predicted class,
/// the correctness, or the domain of a prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ConfidenceTransform {
    /// Replace each confidence with its bin's accuracy.
    HistogramBinning { bins: Vec<BinRemap> },
    /// Rescale class probabilities by `softmax(log(p) / temperature)`.
    Temperature { temperature: f64 },
}

impl ConfidenceTransform {
    /// Histogram-binning transform of a calibration curve: each confidence is
    /// replaced by the accuracy of the bin it falls in. Confidences outside
    /// every bin clamp to the nearest bin.
    pub fn histogram_binning(curve: &CalibrationCurve) -> Self {
        let bins = curve
            .bins()
            .iter()
            .map(|b| BinRemap {
                lower: b.lower,
                upper: b.upper,
                value: b.accuracy,
            })
            .collect();
        Self::HistogramBinning { bins }
    }

    pub fn temperature(temperature: f64) -> Result<Self, CurveError> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(CurveError::InvalidTemperature { value: temperature });
        }
        Ok(Self::Temperature { temperature })
    }

    /// Maps a raw confidence through the transform.
    ///
    /// The temperature variant rescales a full probability vector, so for it
    /// this returns [`CurveError::MissingProbs`].
    pub fn apply_confidence(&self, confidence: f64) -> Result<f64, CurveError> {
        match self {
            Self::HistogramBinning { bins } => {
                if bins.is_empty() {
                    return Err(CurveError::EmptyInput);
                }
                let i = bins.partition_point(|b| b.lower <= confidence);
                let idx = i.saturating_sub(1).min(bins.len() - 1);
                Ok(bins[idx].value)
            }
            Self::Temperature { .. } => Err(CurveError::MissingProbs),
        }
    }

    /// Maps a class probability vector through the transform, returning the
    /// new vector and the new confidence (its maximum).
    pub fn apply_probs(&self, probs: &[f64]) -> Result<(Vec<f64>, f64), CurveError> {
        match self {
            Self::HistogramBinning { .. } => {
                let conf = max_entry(probs).ok_or(CurveError::EmptyInput)?;
                let new_conf = self.apply_confidence(conf)?;
                Ok((probs.to_vec(), new_conf))
            }
            Self::Temperature { temperature } => {
                let scaled = apply_temperature(probs, *temperature)?;
                let conf = max_entry(&scaled).expect("softmax output is non-empty");
                Ok((scaled, conf))
            }
        }
    }
}

fn max_entry(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::max)
}

/// Rescales a probability vector as `softmax(log(p) / t)`.
///
/// Zero entries are floored at 1e-12 (with a warning) before taking logs;
/// the argmax is preserved for every temperature.
pub fn apply_temperature(probs: &[f64], t: f64) -> Result<Vec<f64>, CurveError> {
    if probs.is_empty() {
        return Err(CurveError::EmptyInput);
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(CurveError::InvalidTemperature { value: t });
    }
    for (index, &p) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(CurveError::InvalidProbability { index, value: p });
        }
    }
    let mut floored: Vec<f64> = probs.to_vec();
    if floored.iter().any(|&p| p < 1e-12) {
        log::warn!("probability vector has entries below 1e-12; flooring before log");
        for p in &mut floored {
            *p = p.max(1e-12);
        }
        let sum: f64 = floored.iter().sum();
        for p in &mut floored {
            *p /= sum;
        }
    }
    let logits: Vec<f64> = floored.iter().map(|&p| math::ln(p) / t).collect();
    let max_logit = logits.iter().copied().reduce(f64::max).unwrap();
    let exps: Vec<f64> = logits.iter().map(|&z| math::exp(z - max_logit)).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.iter().map(|&e| e / sum).collect())
}

/// Grid-searches [`TEMPERATURE_GRID`] for the temperature minimizing ECE of
/// the rescaled confidences. Ties break toward the temperature nearest 1.0,
/// then toward the smaller temperature.
///
/// `samples` pairs each prediction's class probability vector with its
/// correctness; every prediction must carry probabilities.
pub fn fit_temperature(
    samples: &[(&[f64], bool)],
    scheme: BinningScheme,
) -> Result<TemperatureFit, CurveError> {
    fit_temperature_on_grid(samples, scheme, &TEMPERATURE_GRID)
}

/// Like [`fit_temperature`] but over a caller-supplied temperature grid.
pub fn fit_temperature_on_grid(
    samples: &[(&[f64], bool)],
    scheme: BinningScheme,
    grid: &[f64],
) -> Result<TemperatureFit, CurveError> {
    if samples.is_empty() || grid.is_empty() {
        return Err(CurveError::EmptyInput);
    }
    let mut best: Option<(f64, f64, f64)> = None; // (ece, |t - 1|, t)
    for &t in grid {
        let outcomes: Result<Vec<Outcome>, CurveError> = samples
            .iter()
            .map(|&(probs, correct)| {
                let scaled = apply_temperature(probs, t)?;
                let conf = max_entry(&scaled).expect("softmax output is non-empty");
                Ok(Outcome::new(conf, correct))
            })
            .collect();
        let score = ece(&outcomes?, scheme)?;
        let key = (score, math::abs(t - 1.0), t);
        let better = match best {
            None => true,
            Some(b) => {
                key.0 < b.0 || (key.0 == b.0 && (key.1 < b.1 || (key.1 == b.1 && key.2 < b.2)))
            }
        };
        if better {
            best = Some(key);
        }
    }
    let (ece_value, _, temperature) = best.unwrap();
    Ok(TemperatureFit {
        transform: ConfidenceTransform::Temperature { temperature },
        ece: ece_value,
    })
}

/// A fitted transform together with the criterion value it achieved.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureFit {
    pub transform: ConfidenceTransform,
    pub ece: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn four_record_set() -> Vec<Outcome> {
        vec![
            Outcome::new(0.9, true),
            Outcome::new(0.8, false),
            Outcome::new(0.7, true),
            Outcome::new(0.6, true),
        ]
    }

    #[test]
    fn precision_curve_manual_enumeration() {
        let curve = PrecisionCurve::from_outcomes(&four_record_set()).unwrap();
        assert_eq!(curve.precision_at(0.85), 1.0);
        assert_eq!(curve.precision_at(0.75), 0.5);
        assert_eq!(curve.precision_at(0.65), 2.0 / 3.0);
        assert_eq!(curve.precision_at(0.5), 0.75);
    }

    #[test]
    fn precision_all_correct_is_one_everywhere() {
        let outcomes: Vec<Outcome> = (1..=5)
            .map(|i| Outcome::new(i as f64 / 10.0, true))
            .collect();
        let curve = PrecisionCurve::from_outcomes(&outcomes).unwrap();
        for i in 0..=100 {
            assert_eq!(curve.precision_at(i as f64 / 100.0), 1.0);
        }
    }

    #[test]
    fn precision_above_max_confidence_is_vacuous() {
        let curve = PrecisionCurve::from_outcomes(&[Outcome::new(0.4, false)]).unwrap();
        assert_eq!(curve.precision_at(0.5), 1.0);
        assert_eq!(curve.count_at(0.5), 0);
        assert_eq!(curve.precision_at(0.4), 0.0);
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(
            PrecisionCurve::from_outcomes(&[]).unwrap_err(),
            CurveError::EmptyInput
        );
    }

    #[test]
    fn sample_vector_matches_enumeration() {
        let curve = PrecisionCurve::from_outcomes(&four_record_set()).unwrap();
        let v = curve.sample_vector();
        let expected = [0.75, 0.75, 0.75, 0.75, 0.75, 0.75, 2.0 / 3.0, 0.5, 1.0, 1.0];
        assert_eq!(v.values(), &expected);
    }

    #[test]
    fn sample_vector_single_record() {
        let curve = PrecisionCurve::from_outcomes(&[Outcome::new(0.55, true)]).unwrap();
        // Thresholds <= 0.5 see the record (correct); >= 0.6 are vacuous.
        assert_eq!(v10(&curve.sample_vector()), [1.0; 10]);
    }

    fn v10(v: &PrecisionVector) -> [f64; 10] {
        *v.values()
    }

    #[test]
    fn interpolate_midpoint_and_anchors() {
        let mut values = [0.0; 10];
        values[5] = 0.8; // t = 0.6
        values[6] = 0.9; // t = 0.7
        let v = PrecisionVector::new(values).unwrap();
        assert!((v.interpolate(0.65) - 0.85).abs() < 1e-15);
        assert_eq!(v.interpolate(0.6), 0.8);
        assert_eq!(v.interpolate(0.7), 0.9);
    }

    #[test]
    fn interpolate_constant_extension_below_first_anchor() {
        let mut values = [0.5; 10];
        values[0] = 0.3;
        let v = PrecisionVector::new(values).unwrap();
        assert_eq!(v.interpolate(0.1), 0.3);
        assert_eq!(v.interpolate(0.05), 0.3);
        assert_eq!(v.interpolate(0.0), 0.3);
    }

    #[test]
    #[should_panic(expected = "outside [0, 1]")]
    fn interpolate_rejects_out_of_range() {
        let v = PrecisionVector::constant(0.5).unwrap();
        v.interpolate(1.5);
    }

    #[test]
    fn calibration_single_bin_is_overall_stats() {
        let outcomes = four_record_set();
        let curve =
            CalibrationCurve::from_outcomes(&outcomes, BinningScheme::equal_mass(1).unwrap())
                .unwrap();
        assert_eq!(curve.bins().len(), 1);
        let bin = curve.bins()[0];
        assert_eq!(bin.count, 4);
        assert!((bin.mean_confidence - 0.75).abs() < 1e-15);
        assert_eq!(bin.accuracy, 0.75);
    }

    #[test]
    fn calibration_equal_width_single_occupied_bin() {
        let outcomes: Vec<Outcome> = (0..8)
            .map(|i| Outcome::new(0.75 + 0.005 * i as f64, i % 2 == 0))
            .collect();
        let curve =
            CalibrationCurve::from_outcomes(&outcomes, BinningScheme::equal_width(10).unwrap())
                .unwrap();
        assert_eq!(curve.bins().len(), 10);
        let occupied: Vec<_> = curve.bins().iter().filter(|b| b.count > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(occupied[0].count, 8);
        assert_eq!(occupied[0].lower, 0.7);
    }

    #[test]
    fn ece_one_hundred_at_point_eight() {
        // 100 records at confidence 0.8: with exactly 80 correct the gap is
        // zero; with all correct it is 0.2.
        let mk = |correct: usize| -> Vec<Outcome> {
            (0..100).map(|i| Outcome::new(0.8, i < correct)).collect()
        };
        let scheme = BinningScheme::default();
        assert!(ece(&mk(80), scheme).unwrap().abs() < 1e-12);
        assert!((ece(&mk(100), scheme).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn ece_full_confidence_all_correct() {
        let outcomes = vec![Outcome::new(1.0, true); 20];
        assert_eq!(ece(&outcomes, BinningScheme::default()).unwrap(), 0.0);
    }

    #[test]
    fn ece_too_few_records_for_equal_mass() {
        let outcomes = vec![Outcome::new(0.5, true); 3];
        assert!(matches!(
            ece(&outcomes, BinningScheme::equal_mass(10).unwrap()),
            Err(CurveError::TooFewRecords {
                records: 3,
                bins: 10
            })
        ));
    }

    #[test]
    fn conversion_formula_arithmetic() {
        // Confidences {0.6, 0.85, 0.9}: count(0.6) = 3, count(0.8) = 2.
        // With f(0.6) = 2/3 and f(0.8) = 0.5 the bin [0.6, 0.8) gets
        // accuracy (2/3·3 − 0.5·2) / (3 − 2) = 1.0.
        let mut values = [0.0; 10];
        values[4] = 0.7; // 0.5
        values[5] = 2.0 / 3.0; // 0.6
        values[6] = 7.0 / 12.0; // 0.7 (linear midpoint keeps the segment straight)
        values[7] = 0.5; // 0.8
        let v = PrecisionVector::new(values).unwrap();
        let confs = [0.6, 0.85, 0.9];
        let curve = CalibrationCurve::from_precision_vector(
            &v,
            &confs,
            BinningScheme::equal_width(5).unwrap(),
        )
        .unwrap();
        let bin = curve.bins()[3]; // [0.6, 0.8)
        assert_eq!(bin.count, 1);
        assert!((bin.accuracy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conversion_constant_one_gives_unit_accuracy() {
        let v = PrecisionVector::constant(1.0).unwrap();
        let confs: Vec<f64> = (0..40).map(|i| 0.3 + 0.015 * i as f64).collect();
        let curve =
            CalibrationCurve::from_precision_vector(&v, &confs, BinningScheme::default()).unwrap();
        for bin in curve.bins() {
            assert_eq!(bin.accuracy, 1.0);
        }
    }

    #[test]
    fn conversion_round_trip_on_anchor_aligned_confidences() {
        // Confidences sitting exactly on the anchors make the interpolated
        // curve agree with the step curve at every bin edge, so the converted
        // bin accuracies match the direct calibration curve.
        let outcomes: Vec<Outcome> = (0..60)
            .map(|i| {
                let conf = ANCHORS[i % 10];
                Outcome::new(conf, (i * 7) % 10 < 6)
            })
            .collect();
        let gold = PrecisionCurve::from_outcomes(&outcomes)
            .unwrap()
            .sample_vector();
        let confs: Vec<f64> = outcomes.iter().map(|o| o.confidence).collect();
        for scheme in [
            BinningScheme::default(),
            BinningScheme::equal_width(10).unwrap(),
            BinningScheme::equal_mass(4).unwrap(),
        ] {
            let direct = CalibrationCurve::from_outcomes(&outcomes, scheme).unwrap();
            let converted = CalibrationCurve::from_precision_vector(&gold, &confs, scheme).unwrap();
            assert_eq!(direct.bins().len(), converted.bins().len());
            for (d, c) in direct.bins().iter().zip(converted.bins()) {
                assert_eq!(d.count, c.count);
                if d.count == 0 {
                    // Empty bins carry conventions, not data.
                    continue;
                }
                assert!(
                    (d.accuracy - c.accuracy).abs() < 1e-12,
                    "bin [{}, {}): direct {} vs converted {}",
                    d.lower,
                    d.upper,
                    d.accuracy,
                    c.accuracy
                );
            }
        }
    }

    #[test]
    fn histogram_binning_trivial_single_bin() {
        let outcomes: Vec<Outcome> = (0..10)
            .map(|i| Outcome::new(0.05 + 0.09 * i as f64, i < 7))
            .collect();
        let curve =
            CalibrationCurve::from_outcomes(&outcomes, BinningScheme::equal_mass(1).unwrap())
                .unwrap();
        let transform = ConfidenceTransform::histogram_binning(&curve);
        for o in &outcomes {
            assert_eq!(transform.apply_confidence(o.confidence).unwrap(), 0.7);
        }
    }

    #[test]
    fn histogram_binning_drives_same_data_ece_to_zero() {
        let outcomes: Vec<Outcome> = (0..50)
            .map(|i| Outcome::new(0.02 * i as f64 + 0.005, (i * 13) % 17 < 9))
            .collect();
        for scheme in [
            BinningScheme::default(),
            BinningScheme::equal_width(7).unwrap(),
            BinningScheme::equal_mass(5).unwrap(),
        ] {
            let curve = CalibrationCurve::from_outcomes(&outcomes, scheme).unwrap();
            let transform = ConfidenceTransform::histogram_binning(&curve);
            let remapped: Vec<Outcome> = outcomes
                .iter()
                .map(|o| Outcome::new(transform.apply_confidence(o.confidence).unwrap(), o.correct))
                .collect();
            assert!(ece(&remapped, scheme).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn histogram_binning_identity_curve_moves_to_bin_mean() {
        // A curve whose accuracy equals its mean confidence per bin maps
        // every member confidence to that bin mean.
        let mut outcomes = Vec::new();
        for i in 0..4 {
            outcomes.push(Outcome::new(0.25, i < 1));
            outcomes.push(Outcome::new(0.75, i < 3));
        }
        let curve =
            CalibrationCurve::from_outcomes(&outcomes, BinningScheme::equal_mass(2).unwrap())
                .unwrap();
        for bin in curve.bins() {
            assert!((bin.accuracy - bin.mean_confidence).abs() < 1e-15);
        }
        let transform = ConfidenceTransform::histogram_binning(&curve);
        assert!((transform.apply_confidence(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((transform.apply_confidence(0.75).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn temperature_identity_and_uniform_limit() {
        let probs = [0.5, 0.3, 0.2];
        let same = apply_temperature(&probs, 1.0).unwrap();
        for (a, b) in probs.iter().zip(&same) {
            assert!((a - b).abs() < 1e-12);
        }
        let flat = apply_temperature(&probs, 1e6).unwrap();
        for p in &flat {
            assert!((p - 1.0 / 3.0).abs() < 1e-4);
        }
    }

    #[test]
    fn temperature_hand_evaluated() {
        // softmax(2·log p) for p = [0.8, 0.2] is [0.64, 0.04] / 0.68.
        let scaled = apply_temperature(&[0.8, 0.2], 0.5).unwrap();
        assert!((scaled[0] - 0.64 / 0.68).abs() < 1e-12);
        assert!((scaled[1] - 0.04 / 0.68).abs() < 1e-12);
    }

    #[test]
    fn temperature_preserves_argmax() {
        let probs = [0.05, 0.6, 0.35];
        for t in [0.1, 0.5, 2.0, 5.0] {
            let scaled = apply_temperature(&probs, t).unwrap();
            let argmax = |v: &[f64]| {
                v.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .unwrap()
                    .0
            };
            assert_eq!(argmax(&scaled), 1);
            let sum: f64 = scaled.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn temperature_rejects_bad_inputs() {
        assert!(matches!(
            apply_temperature(&[0.5, 0.5], 0.0),
            Err(CurveError::InvalidTemperature { .. })
        ));
        assert!(matches!(
            apply_temperature(&[], 1.0),
            Err(CurveError::EmptyInput)
        ));
        assert!(matches!(
            apply_temperature(&[1.2, -0.2], 1.0),
            Err(CurveError::InvalidProbability { .. })
        ));
    }

    #[test]
    fn temperature_floors_zero_entries() {
        let scaled = apply_temperature(&[1.0, 0.0], 2.0).unwrap();
        assert!(scaled[0] > scaled[1]);
        assert!((scaled.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_temperature_single_record_returns_grid_value() {
        let probs = vec![0.7, 0.3];
        let samples = vec![(probs.as_slice(), true)];
        let fit = fit_temperature(&samples, BinningScheme::equal_mass(1).unwrap()).unwrap();
        let ConfidenceTransform::Temperature { temperature } = fit.transform else {
            panic!("expected temperature transform");
        };
        assert!(TEMPERATURE_GRID.contains(&temperature));
    }
}
