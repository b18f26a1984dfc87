//! Reference precision curves the recalibrator is compared against.
//!
//! Sample Average and Domain Average are not slice-specific: they produce
//! one fixed vector from the training corpus and reuse it for every test
//! slice. Empirical builds a curve from just the `k` few-shot records; it
//! peeks at their labels, which no other method (including the recalibrator)
//! gets to do. Oracle is the skyline: the slice's own ground-truth vector.

use crate::curves::{CurveError, Outcome, PrecisionCurve, PrecisionVector, ANCHORS};
use crate::records::Corpus;

/// Precision vector of the pooled training distribution over all domains.
pub fn sample_average(corpus: &Corpus) -> Result<PrecisionVector, CurveError> {
    Ok(PrecisionCurve::from_outcomes(&corpus.outcomes())?.sample_vector())
}

/// Unweighted per-threshold mean of each domain's precision vector.
///
/// Vacuous regions of a domain curve (thresholds above its top confidence)
/// participate in the mean at their value of 1.0.
pub fn domain_average(corpus: &Corpus) -> Result<PrecisionVector, CurveError> {
    if corpus.domains().is_empty() {
        return Err(CurveError::EmptyInput);
    }
    let mut sums = [0.0; ANCHORS.len()];
    for outcomes in corpus.domains().keys().map(|d| {
        corpus
            .domain_outcomes(d)
            .expect("domain keys come from the corpus")
    }) {
        let vector = PrecisionCurve::from_outcomes(&outcomes)?.sample_vector();
        for (sum, value) in sums.iter_mut().zip(vector.values()) {
            *sum += value;
        }
    }
    let count = corpus.domains().len() as f64;
    for sum in &mut sums {
        *sum /= count;
    }
    PrecisionVector::new(sums)
}

/// Precision vector of the `k` labeled few-shot records alone.
pub fn empirical(fewshot: &[Outcome]) -> Result<PrecisionVector, CurveError> {
    Ok(PrecisionCurve::from_outcomes(fewshot)?.sample_vector())
}

/// Ground-truth precision vector of the full slice; equals the task target.
pub fn oracle(slice: &[Outcome]) -> Result<PrecisionVector, CurveError> {
    Ok(PrecisionCurve::from_outcomes(slice)?.sample_vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::PredictionRecord;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;
    use alloc::vec::Vec;

    fn record(id: &str, domain: &str, confidence: f64, correct: bool) -> PredictionRecord {
        PredictionRecord {
            id: id.to_string(),
            domain: domain.to_string(),
            confidence,
            probs: None,
            correct,
            features: None,
        }
    }

    #[test]
    fn single_domain_sample_average_is_domain_curve() {
        let records = vec![
            record("a", "d", 0.9, true),
            record("b", "d", 0.8, false),
            record("c", "d", 0.7, true),
            record("e", "d", 0.6, true),
        ];
        let corpus = Corpus::new(records).unwrap();
        let avg = sample_average(&corpus).unwrap();
        let direct = PrecisionCurve::from_outcomes(&corpus.outcomes())
            .unwrap()
            .sample_vector();
        assert_eq!(avg, direct);
        assert_eq!(avg, domain_average(&corpus).unwrap());
    }

    #[test]
    fn all_correct_corpus_averages_to_one() {
        let records: Vec<PredictionRecord> = (0..6)
            .map(|i| record(&format!("r{i}"), "d", 0.3 + 0.1 * i as f64, true))
            .collect();
        let corpus = Corpus::new(records).unwrap();
        assert_eq!(sample_average(&corpus).unwrap().values(), &[1.0; 10]);
    }

    #[test]
    fn pooled_two_domain_enumeration() {
        // Domain x: (0.9 right), (0.7 wrong), (0.5 right), (0.3 right).
        // Domain y: (0.8 right), (0.6 wrong), (0.4 wrong), (0.2 right).
        let records = vec![
            record("x0", "x", 0.9, true),
            record("x1", "x", 0.7, false),
            record("x2", "x", 0.5, true),
            record("x3", "x", 0.3, true),
            record("y0", "y", 0.8, true),
            record("y1", "y", 0.6, false),
            record("y2", "y", 0.4, false),
            record("y3", "y", 0.2, true),
        ];
        let corpus = Corpus::new(records).unwrap();
        let avg = sample_average(&corpus).unwrap();
        // Pooled precision above each anchor, counted by hand.
        let expected = [
            5.0 / 8.0,
            5.0 / 8.0,
            4.0 / 7.0,
            3.0 / 6.0,
            3.0 / 5.0,
            2.0 / 4.0,
            2.0 / 3.0,
            2.0 / 2.0,
            1.0,
            1.0,
        ];
        for (got, want) in avg.values().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn opposed_domains_average_to_half() {
        let mut records = Vec::new();
        for i in 0..5 {
            let conf = 0.2 * i as f64 + 0.2;
            records.push(record(&format!("g{i}"), "good", conf, true));
            records.push(record(&format!("b{i}"), "bad", conf, false));
        }
        records.push(record("g5", "good", 1.0, true));
        records.push(record("b5", "bad", 1.0, false));
        let corpus = Corpus::new(records).unwrap();
        let avg = domain_average(&corpus).unwrap();
        assert_eq!(avg.values(), &[0.5; 10]);
    }

    #[test]
    fn empirical_matches_exact_curve_and_edges() {
        let outcomes = vec![
            Outcome::new(0.9, true),
            Outcome::new(0.8, false),
            Outcome::new(0.7, true),
            Outcome::new(0.6, true),
        ];
        let v = empirical(&outcomes).unwrap();
        assert_eq!(v.values()[6], 2.0 / 3.0);
        assert_eq!(v.values()[7], 0.5);
        assert_eq!(v.values()[8], 1.0);

        let single = empirical(&[Outcome::new(0.9, true)]).unwrap();
        assert_eq!(single.values(), &[1.0; 10]);

        let wrong = empirical(&[Outcome::new(0.5, false), Outcome::new(0.4, false)]).unwrap();
        assert_eq!(wrong.values()[..5], [0.0; 5]);
    }

    #[test]
    fn equal_sized_domains_with_shared_support_average_to_pooled() {
        // Same confidence multiset in both domains, different correctness:
        // per-threshold counts match, so the unweighted mean of domain
        // precisions equals the pooled precision.
        let confs = [0.2, 0.45, 0.6, 0.75, 0.9];
        let mut records = Vec::new();
        for (i, &c) in confs.iter().enumerate() {
            records.push(record(&format!("a{i}"), "a", c, i % 2 == 0));
            records.push(record(&format!("b{i}"), "b", c, i < 2));
        }
        let corpus = Corpus::new(records).unwrap();
        let pooled = sample_average(&corpus).unwrap();
        let averaged = domain_average(&corpus).unwrap();
        for (p, a) in pooled.values().iter().zip(averaged.values()) {
            assert!((p - a).abs() < 1e-12, "{p} vs {a}");
        }
    }

    #[test]
    fn oracle_equals_empirical_on_full_slice() {
        let outcomes: Vec<Outcome> = (0..9)
            .map(|i| Outcome::new(0.1 * (i + 1) as f64, i % 2 == 0))
            .collect();
        assert_eq!(oracle(&outcomes).unwrap(), empirical(&outcomes).unwrap());
    }
}
