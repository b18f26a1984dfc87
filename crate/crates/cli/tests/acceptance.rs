//! Release acceptance suite.
//!
//! Each test checks one release criterion at its stated tolerance and prints
//! a `criterion NN <name>: PASS` line (visible with `--nocapture`):
//!
//! ```text
//! cargo test -p slicecal --test acceptance -- --nocapture
//! ```
//!
//! Criteria 7-11 share one synthetic benchmark (ten one-hot-featured
//! domains, 2,000 training / 200 test tasks, n = 500) and its trained
//! models, built once in [`BENCHMARK`]. The `brute` module re-derives every
//! checked quantity with plain loops so the fast implementations are
//! verified against independent recomputations.

use std::collections::BTreeMap;
use std::path::Path;

use once_cell::sync::Lazy;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slicecal::cli::synthesize_datasets;
use slicecal::config::RunConfig;
use slicecal::synth;
use slicecal_core::baselines;
use slicecal_core::curves::{
    self, BinningScheme, CalibrationCurve, ConfidenceTransform, Outcome, PrecisionCurve,
    PrecisionVector, ANCHORS, TEMPERATURE_GRID,
};
use slicecal_core::eval::{self, MethodOutput};
use slicecal_core::recalibrator::{self, RecalibratorParams, TrainConfig};
use slicecal_core::records::{Corpus, PredictionRecord};
use slicecal_core::slices::TaskInstance;

const BENCHMARK_SEED: u64 = 7;
const TARGETS: [f64; 3] = [0.85, 0.9, 0.95];
const COSTS: [f64; 2] = [0.4, 0.6];

fn pass(name: &str) {
    println!("criterion {name}: PASS");
}

// ─── Independent brute-force recomputations ─────────────────────────────────

mod brute {
    use slicecal_core::curves::{BinMode, BinningScheme, Outcome};

    pub fn precision(outcomes: &[Outcome], t: f64) -> f64 {
        let mut above = 0usize;
        let mut correct = 0usize;
        for o in outcomes {
            if o.confidence >= t {
                above += 1;
                if o.correct {
                    correct += 1;
                }
            }
        }
        if above == 0 {
            1.0
        } else {
            correct as f64 / above as f64
        }
    }

    pub struct Bin {
        pub count: usize,
        pub mean_confidence: f64,
        pub accuracy: f64,
    }

    /// Re-derives the binning contract with plain loops: ascending sort,
    /// target cuts advanced past ties for equal-mass (merging collisions),
    /// fixed `[i/m, (i+1)/m)` intervals for equal-width.
    pub fn bins(outcomes: &[Outcome], scheme: BinningScheme) -> Vec<Bin> {
        let mut sorted = outcomes.to_vec();
        sorted.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
        let n = sorted.len();
        let m = scheme.num_bins;
        let mut ranges: Vec<(usize, usize)> = Vec::new();
        match scheme.mode {
            BinMode::EqualMass => {
                let mut cuts = vec![0usize];
                for i in 1..m {
                    let mut pos = i * n / m;
                    while pos < n && pos > 0 && sorted[pos].confidence == sorted[pos - 1].confidence
                    {
                        pos += 1;
                    }
                    if pos > *cuts.last().unwrap() && pos < n {
                        cuts.push(pos);
                    }
                }
                cuts.push(n);
                for w in cuts.windows(2) {
                    ranges.push((w[0], w[1]));
                }
            }
            BinMode::EqualWidth => {
                for i in 0..m {
                    let lower = i as f64 / m as f64;
                    let upper = (i + 1) as f64 / m as f64;
                    let members: Vec<usize> = (0..n)
                        .filter(|&j| {
                            let c = sorted[j].confidence;
                            if i == m - 1 {
                                c >= lower
                            } else {
                                c >= lower && c < upper
                            }
                        })
                        .collect();
                    if members.is_empty() {
                        ranges.push((0, 0));
                    } else {
                        ranges.push((members[0], members[members.len() - 1] + 1));
                    }
                }
            }
        }
        ranges
            .into_iter()
            .map(|(start, end)| {
                let members = &sorted[start..end];
                if members.is_empty() {
                    Bin {
                        count: 0,
                        mean_confidence: f64::NAN,
                        accuracy: f64::NAN,
                    }
                } else {
                    let conf: f64 =
                        members.iter().map(|o| o.confidence).sum::<f64>() / members.len() as f64;
                    let acc =
                        members.iter().filter(|o| o.correct).count() as f64 / members.len() as f64;
                    Bin {
                        count: members.len(),
                        mean_confidence: conf,
                        accuracy: acc,
                    }
                }
            })
            .collect()
    }

    pub fn ece(outcomes: &[Outcome], scheme: BinningScheme) -> f64 {
        let n = outcomes.len() as f64;
        bins(outcomes, scheme)
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| (b.count as f64 / n) * (b.mean_confidence - b.accuracy).abs())
            .sum()
    }

    /// Independent piecewise-linear interpolation over the ten anchors.
    pub fn interpolate(values: &[f64; 10], t: f64) -> f64 {
        let anchors = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
        if t <= anchors[0] {
            return values[0];
        }
        for i in 0..9 {
            if t <= anchors[i + 1] {
                if t == anchors[i] {
                    return values[i];
                }
                let w = (t - anchors[i]) / (anchors[i + 1] - anchors[i]);
                return values[i] + w * (values[i + 1] - values[i]);
            }
        }
        values[9]
    }
}

fn random_outcomes(rng: &mut ChaCha8Rng, len: usize) -> Vec<Outcome> {
    (0..len)
        .map(|_| {
            let confidence = if rng.gen_bool(0.5) {
                // Coarse grid with frequent ties.
                rng.gen_range(0..=8) as f64 / 8.0
            } else {
                rng.gen_range(0..=1000) as f64 / 1000.0
            };
            Outcome::new(confidence, rng.gen_bool(0.6))
        })
        .collect()
}

// ─── Shared benchmark fixture (criteria 7-11) ────────────────────────────────

struct Benchmark {
    corpus: Corpus,
    /// Few-shot size -> (train tasks, test tasks).
    datasets: BTreeMap<usize, (Vec<TaskInstance>, Vec<TaskInstance>)>,
    /// Few-shot size -> model trained with the asymmetric (beta = 5) loss.
    models_b5: BTreeMap<usize, RecalibratorParams>,
    /// Symmetric-loss model at k = 20.
    model_b1: RecalibratorParams,
    /// (first, last) training loss of the k = 20 asymmetric run.
    loss_first_last: (f64, f64),
}

fn benchmark_config(k: usize) -> RunConfig {
    RunConfig {
        seed: BENCHMARK_SEED,
        n: 500,
        k,
        train_count: 2_000,
        test_count: 200,
        ..RunConfig::default()
    }
}

static BENCHMARK: Lazy<Benchmark> = Lazy::new(|| {
    let corpus = synth::benchmark_corpus(3_000);
    let mut datasets = BTreeMap::new();
    let mut models_b5 = BTreeMap::new();
    let mut loss_first_last = (f64::NAN, f64::NAN);
    for k in slicecal::cli::ABLATION_KS {
        let config = benchmark_config(k);
        let (train, test) = synthesize_datasets(&corpus, &config).expect("dataset builds");
        let trained =
            recalibrator::train(&train, &config.train_config()).expect("training converges");
        if k == 20 {
            loss_first_last = (
                trained.loss_log.first().unwrap().loss,
                trained.loss_log.last().unwrap().loss,
            );
            assert!(trained.loss_log.iter().all(|p| p.loss.is_finite()));
        }
        datasets.insert(k, (train, test));
        models_b5.insert(k, trained.params);
    }
    let config = benchmark_config(20);
    let model_b1 = recalibrator::train(
        &datasets[&20].0,
        &TrainConfig {
            beta: 1.0,
            ..config.train_config()
        },
    )
    .expect("training converges")
    .params;
    Benchmark {
        corpus,
        datasets,
        models_b5,
        model_b1,
        loss_first_last,
    }
});

#[test]
fn benchmark_training_loss_decreases() {
    let (first, last) = BENCHMARK.loss_first_last;
    assert!(last.is_finite() && first.is_finite());
    assert!(last < first, "loss went from {first} to {last}");
}

fn slice_outcomes(corpus: &Corpus, task: &TaskInstance) -> Vec<Outcome> {
    corpus
        .records_by_ids(task.eval_record_ids.iter().map(String::as_str))
        .expect("eval ids resolve")
        .iter()
        .map(|r| r.outcome())
        .collect()
}

fn success_rate_and_recall(
    preds: &[PrecisionVector],
    slices: &[Vec<Outcome>],
    target: f64,
) -> (f64, f64) {
    let mut successes = 0usize;
    let mut recall_sum = 0.0;
    for (pred, slice) in preds.iter().zip(slices) {
        if let Some(t) = eval::threshold_for_precision(pred, target).unwrap() {
            let (ok, recall) = eval::success_and_recall(t, slice, target).unwrap();
            if ok {
                successes += 1;
            }
            recall_sum += recall;
        }
    }
    let n = preds.len() as f64;
    (successes as f64 / n, recall_sum / n)
}

type MethodVectors = Vec<(&'static str, Vec<PrecisionVector>)>;

/// Per-slice predicted vectors of every curve method on the k = 20 test set.
fn benchmark_method_vectors(bench: &Benchmark) -> (MethodVectors, Vec<Vec<Outcome>>) {
    let (_, test) = &bench.datasets[&20];
    let model = &bench.models_b5[&20];
    let sample_avg = baselines::sample_average(&bench.corpus).unwrap();
    let domain_avg = baselines::domain_average(&bench.corpus).unwrap();
    let mut fsc = Vec::new();
    let mut empirical = Vec::new();
    let mut oracle = Vec::new();
    let mut slices = Vec::new();
    for task in test {
        fsc.push(model.predict(&task.fewshot_features).unwrap());
        let fewshot: Vec<Outcome> = bench
            .corpus
            .records_by_ids(task.fewshot_record_ids.iter().map(String::as_str))
            .unwrap()
            .iter()
            .map(|r| r.outcome())
            .collect();
        empirical.push(baselines::empirical(&fewshot).unwrap());
        oracle.push(task.target);
        slices.push(slice_outcomes(&bench.corpus, task));
    }
    let methods = vec![
        ("sample-avg", vec![sample_avg; test.len()]),
        ("domain-avg", vec![domain_avg; test.len()]),
        ("empirical", empirical),
        ("fsc", fsc),
        ("oracle", oracle),
    ];
    (methods, slices)
}

// ─── Criteria ────────────────────────────────────────────────────────────────

#[test]
fn criterion_01_curve_math_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..1_000 {
        let len = rng.gen_range(1..=20);
        let outcomes = random_outcomes(&mut rng, len);
        let scheme = if rng.gen_bool(0.5) {
            BinningScheme::equal_mass(rng.gen_range(1..=len)).unwrap()
        } else {
            BinningScheme::equal_width(rng.gen_range(1..=12)).unwrap()
        };

        let curve = PrecisionCurve::from_outcomes(&outcomes).unwrap();
        for i in 0..=40 {
            let t = i as f64 / 40.0;
            assert_eq!(
                curve.precision_at(t),
                brute::precision(&outcomes, t),
                "case {case}: precision at {t}"
            );
        }
        for o in &outcomes {
            assert_eq!(
                curve.precision_at(o.confidence),
                brute::precision(&outcomes, o.confidence)
            );
        }

        let fast_bins = CalibrationCurve::from_outcomes(&outcomes, scheme).unwrap();
        let slow_bins = brute::bins(&outcomes, scheme);
        assert_eq!(fast_bins.bins().len(), slow_bins.len(), "case {case}");
        for (f, s) in fast_bins.bins().iter().zip(&slow_bins) {
            assert_eq!(f.count, s.count, "case {case}");
            if s.count > 0 {
                assert!((f.mean_confidence - s.mean_confidence).abs() <= 1e-12);
                assert!((f.accuracy - s.accuracy).abs() <= 1e-12);
            }
        }

        let fast = curves::ece(&outcomes, scheme).unwrap();
        let slow = brute::ece(&outcomes, scheme);
        assert!(
            (fast - slow).abs() <= 1e-12,
            "case {case}: ece {fast} vs brute {slow}"
        );
    }
    pass("01 curve-math-oracle-equivalence");
}

#[test]
fn criterion_02_conversion_round_trip() {
    // Anchor-aligned slices: random corpora on the anchor grid plus
    // benchmark test slices (whose confidences are anchor levels).
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut slices: Vec<Vec<Outcome>> = (0..40)
        .map(|_| {
            let len = rng.gen_range(20..=120);
            (0..len)
                .map(|_| {
                    let level = ANCHORS[rng.gen_range(0..10)];
                    Outcome::new(level, rng.gen_bool(level))
                })
                .collect()
        })
        .collect();
    let bench = &*BENCHMARK;
    let (_, test) = &bench.datasets[&20];
    slices.extend(
        test.iter()
            .take(40)
            .map(|task| slice_outcomes(&bench.corpus, task)),
    );

    for (i, outcomes) in slices.iter().enumerate() {
        let gold = PrecisionCurve::from_outcomes(outcomes)
            .unwrap()
            .sample_vector();
        let confidences: Vec<f64> = outcomes.iter().map(|o| o.confidence).collect();
        for scheme in [
            BinningScheme::equal_mass(10).unwrap(),
            BinningScheme::equal_width(10).unwrap(),
        ] {
            let direct = CalibrationCurve::from_outcomes(outcomes, scheme).unwrap();
            let converted =
                CalibrationCurve::from_precision_vector(&gold, &confidences, scheme).unwrap();
            assert_eq!(direct.bins().len(), converted.bins().len());
            for (d, c) in direct.bins().iter().zip(converted.bins()) {
                assert_eq!(d.count, c.count);
                if d.count > 0 {
                    assert!(
                        (d.accuracy - c.accuracy).abs() <= 1e-12,
                        "slice {i}: bin [{}, {}) accuracy {} vs {}",
                        d.lower,
                        d.upper,
                        d.accuracy,
                        c.accuracy
                    );
                }
            }

            let transform = ConfidenceTransform::histogram_binning(&converted);
            let remapped: Vec<Outcome> = outcomes
                .iter()
                .map(|o| Outcome::new(transform.apply_confidence(o.confidence).unwrap(), o.correct))
                .collect();
            let ece = curves::ece(&remapped, scheme).unwrap();
            assert!(ece <= 1e-9, "slice {i}: recalibrated ece {ece}");
        }
    }
    pass("02 conversion-round-trip");
}

#[test]
fn criterion_03_miscalibration_illusion() {
    let corpus = synth::illusion_corpus(200);
    let scheme = BinningScheme::equal_mass(10).unwrap();
    let aggregate = curves::ece(&corpus.outcomes(), scheme).unwrap();
    assert!(aggregate <= 0.03, "aggregate ece {aggregate}");
    for domain in ["overconfident", "underconfident"] {
        let outcomes = corpus.domain_outcomes(domain).unwrap();
        let domain_ece = curves::ece(&outcomes, scheme).unwrap();
        assert!(domain_ece >= 0.10, "{domain} ece {domain_ece}");
    }
    pass("03 miscalibration-illusion");
}

#[test]
fn criterion_04_oracle_skyline() {
    let bench = &*BENCHMARK;
    // Two independently generated test sets over the benchmark corpus.
    let second = synthesize_datasets(
        &bench.corpus,
        &RunConfig {
            seed: BENCHMARK_SEED + 1,
            n: 500,
            k: 20,
            train_count: 1,
            test_count: 200,
            ..RunConfig::default()
        },
    )
    .unwrap()
    .1;
    for (name, test) in [("primary", &bench.datasets[&20].1), ("secondary", &second)] {
        for task in test.iter() {
            let slice = slice_outcomes(&bench.corpus, task);
            for target in TARGETS {
                let t = eval::threshold_for_precision(&task.target, target)
                    .unwrap()
                    .unwrap_or_else(|| panic!("{name}: no threshold for {target}"));
                let (ok, _) = eval::success_and_recall(t, &slice, target).unwrap();
                assert!(ok, "{name}: oracle threshold failed at target {target}");
            }
            assert_eq!(eval::l2_distance(&task.target, &task.target), 0.0);
        }
    }
    pass("04 oracle-skyline");
}

#[test]
fn criterion_05_temperature_recovery() {
    let calibrated = synth::calibrated_levels_corpus(100);
    let scheme = BinningScheme::equal_mass(10).unwrap();
    let fit_on = |corpus: &Corpus| -> f64 {
        let samples: Vec<(&[f64], bool)> = corpus
            .records()
            .iter()
            .map(|r| (r.probs.as_deref().expect("synthetic probs"), r.correct))
            .collect();
        match curves::fit_temperature(&samples, scheme).unwrap().transform {
            ConfidenceTransform::Temperature { temperature } => temperature,
            _ => unreachable!(),
        }
    };
    for &grid_t in &TEMPERATURE_GRID {
        let distorted = synth::distort_with_temperature(&calibrated, 1.0 / grid_t).unwrap();
        let fitted = fit_on(&distorted);
        assert_eq!(fitted, grid_t, "distortion by 1/{grid_t} not inverted");
    }
    assert_eq!(fit_on(&calibrated), 1.0);
    pass("05 temperature-recovery");
}

#[test]
fn criterion_06_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for case in 0..100 {
        let beta = if case % 2 == 0 { 1.0 } else { 5.0 };
        let params = RecalibratorParams::init(2, 3, &mut rng);
        let features: Vec<Vec<f64>> = (0..3)
            .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        // Gold values sit at least 0.05 from the prediction so the finite
        // difference never straddles the loss kink.
        let pred = params.predict(&features).unwrap();
        let mut gold = [0.0; 10];
        for (c, g) in gold.iter_mut().enumerate() {
            let p = pred.values()[c];
            let offset = 0.05 * (1.0 + (c % 4) as f64);
            *g = if (c + case) % 2 == 0 {
                p - offset
            } else {
                p + offset
            }
            .clamp(0.01, 0.99);
        }
        let task = TaskInstance {
            spec: slicecal_core::SliceSpec::new(vec![("d".to_string(), 1.0)]).unwrap(),
            fewshot_record_ids: vec!["a".into(), "b".into(), "c".into()],
            fewshot_features: features,
            target: PrecisionVector::new(gold).unwrap(),
            eval_record_ids: Vec::new(),
            exhausted_domains: Vec::new(),
        };
        let (_, grad) = recalibrator::loss_gradient(&params, &[&task], beta).unwrap();
        let flat_grad: Vec<f64> = grad
            .w1
            .iter()
            .chain(&grad.b1)
            .chain(&grad.w2)
            .chain(&grad.b2)
            .copied()
            .collect();

        let flatten = |p: &RecalibratorParams| -> Vec<f64> {
            p.w1.iter()
                .chain(&p.b1)
                .chain(&p.w2)
                .chain(&p.b2)
                .copied()
                .collect()
        };
        let base = flatten(&params);
        let h = 1e-4;
        for i in 0..base.len() {
            let perturbed = |delta: f64| -> f64 {
                let mut theta = base.clone();
                theta[i] += delta;
                let mut p = params.clone();
                let mut it = theta.into_iter();
                for slot in
                    p.w1.iter_mut()
                        .chain(&mut p.b1)
                        .chain(&mut p.w2)
                        .chain(&mut p.b2)
                {
                    *slot = it.next().unwrap();
                }
                let pred = p.predict(&task.fewshot_features).unwrap();
                recalibrator::asymmetric_loss(&pred, &task.target, beta)
            };
            let fd = (perturbed(h) - perturbed(-h)) / (2.0 * h);
            let denom = flat_grad[i].abs().max(fd.abs()).max(1e-4);
            let rel = (fd - flat_grad[i]).abs() / denom;
            assert!(
                rel <= 1e-4,
                "case {case} beta {beta} param {i}: analytic {} vs fd {fd} (rel {rel})",
                flat_grad[i]
            );
        }
    }
    pass("06 gradient-correctness");
}

#[test]
fn criterion_07_asymmetry_direction() {
    let bench = &*BENCHMARK;
    let (_, test) = &bench.datasets[&20];
    let slices: Vec<Vec<Outcome>> = test
        .iter()
        .map(|t| slice_outcomes(&bench.corpus, t))
        .collect();
    let predict_all = |model: &RecalibratorParams| -> Vec<PrecisionVector> {
        test.iter()
            .map(|t| model.predict(&t.fewshot_features).unwrap())
            .collect()
    };
    let preds_b5 = predict_all(&bench.models_b5[&20]);
    let preds_b1 = predict_all(&bench.model_b1);

    let over_rate = |preds: &[PrecisionVector]| -> f64 {
        let mut over = 0usize;
        let mut total = 0usize;
        for (pred, task) in preds.iter().zip(test) {
            for (p, g) in pred.values().iter().zip(task.target.values()) {
                total += 1;
                if p > g {
                    over += 1;
                }
            }
        }
        over as f64 / total as f64
    };
    let over_b5 = over_rate(&preds_b5);
    let over_b1 = over_rate(&preds_b1);
    assert!(
        over_b5 < over_b1,
        "over-estimation rate: beta=5 {over_b5} vs beta=1 {over_b1}"
    );

    let (success_b5, _) = success_rate_and_recall(&preds_b5, &slices, 0.9);
    let (success_b1, _) = success_rate_and_recall(&preds_b1, &slices, 0.9);
    assert!(
        success_b5 > success_b1,
        "success at 0.9: beta=5 {success_b5} vs beta=1 {success_b1}"
    );
    pass("07 asymmetry-direction");
}

#[test]
fn criterion_08_precision_table_direction() {
    let bench = &*BENCHMARK;
    let (methods, slices) = benchmark_method_vectors(bench);
    let rate = |name: &str| -> (f64, f64) {
        let vectors = &methods.iter().find(|(m, _)| *m == name).unwrap().1;
        success_rate_and_recall(vectors, &slices, 0.9)
    };
    let (fsc_success, fsc_recall) = rate("fsc");
    let (sample_success, sample_recall) = rate("sample-avg");
    let (domain_success, _) = rate("domain-avg");
    let (empirical_success, _) = rate("empirical");
    for (name, other) in [
        ("sample-avg", sample_success),
        ("domain-avg", domain_success),
        ("empirical", empirical_success),
    ] {
        assert!(
            fsc_success >= other + 0.05 - 1e-9,
            "fsc {fsc_success} vs {name} {other}"
        );
    }
    assert!(
        fsc_recall >= sample_recall - 0.15,
        "recall: fsc {fsc_recall} vs sample-avg {sample_recall}"
    );
    pass("08 precision-table-direction");
}

/// Per-slice recalibrated ECE of every method on the benchmark test set.
fn benchmark_eces(bench: &Benchmark) -> Vec<(&'static str, Vec<f64>)> {
    let (_, test) = &bench.datasets[&20];
    let scheme = BinningScheme::equal_mass(10).unwrap();
    let samples: Vec<(&[f64], bool)> = bench
        .corpus
        .records()
        .iter()
        .map(|r| (r.probs.as_deref().unwrap(), r.correct))
        .collect();
    let ts_all = match curves::fit_temperature(&samples, scheme).unwrap().transform {
        ConfidenceTransform::Temperature { temperature } => temperature,
        _ => unreachable!(),
    };
    let (methods, _) = benchmark_method_vectors(bench);
    let vectors_of = |name: &str| -> &Vec<PrecisionVector> {
        &methods.iter().find(|(m, _)| *m == name).unwrap().1
    };

    let names = [
        "base",
        "sample-avg",
        "domain-avg",
        "empirical",
        "ts-fewshot",
        "ts-all",
        "fsc",
        "oracle",
    ];
    let mut eces: Vec<(&'static str, Vec<f64>)> = names.iter().map(|&n| (n, Vec::new())).collect();
    for (i, task) in test.iter().enumerate() {
        let refs: Vec<&PredictionRecord> = bench
            .corpus
            .records_by_ids(task.eval_record_ids.iter().map(String::as_str))
            .unwrap();
        let fewshot_refs: Vec<&PredictionRecord> = bench
            .corpus
            .records_by_ids(task.fewshot_record_ids.iter().map(String::as_str))
            .unwrap();
        let fewshot_samples: Vec<(&[f64], bool)> = fewshot_refs
            .iter()
            .map(|r| (r.probs.as_deref().unwrap(), r.correct))
            .collect();
        let fewshot_scheme = BinningScheme::equal_mass(10.min(fewshot_samples.len())).unwrap();
        let ts_few = match curves::fit_temperature(&fewshot_samples, fewshot_scheme)
            .unwrap()
            .transform
        {
            ConfidenceTransform::Temperature { temperature } => temperature,
            _ => unreachable!(),
        };
        for (name, values) in &mut eces {
            let output = match *name {
                "base" => MethodOutput::Base,
                "ts-fewshot" => MethodOutput::Temperature(ts_few),
                "ts-all" => MethodOutput::Temperature(ts_all),
                other => MethodOutput::Curve(vectors_of(other)[i]),
            };
            values.push(eval::ece_after_recalibration(&output, &refs, scheme).unwrap());
        }
    }
    eces
}

#[test]
fn criterion_09_ece_table_direction() {
    let bench = &*BENCHMARK;
    let eces = benchmark_eces(bench);
    let values_of = |name: &str| -> &Vec<f64> { &eces.iter().find(|(m, _)| *m == name).unwrap().1 };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let fsc = values_of("fsc");
    let fsc_mean = mean(fsc);
    for name in [
        "base",
        "sample-avg",
        "domain-avg",
        "empirical",
        "ts-fewshot",
        "ts-all",
    ] {
        let baseline = values_of(name);
        assert!(
            fsc_mean < mean(baseline),
            "{name}: mean ece {} vs fsc {fsc_mean}",
            mean(baseline)
        );
        let (_, _, lose) = eval::pairwise_winrate(fsc, baseline).unwrap();
        assert!(lose > 50.0, "{name}: lose% {lose}");
    }
    pass("09 ece-table-direction");
}

#[test]
fn criterion_10_utility() {
    // Exactness of the grid search against an exhaustive recomputation.
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..1_000 {
        let mut values = [0.0; 10];
        for v in &mut values {
            *v = rng.gen_range(0..=100) as f64 / 100.0;
        }
        let vector = PrecisionVector::new(values).unwrap();
        let len = rng.gen_range(1..=40);
        let confidences: Vec<f64> = (0..len)
            .map(|_| rng.gen_range(0..=1000) as f64 / 1000.0)
            .collect();
        let c = COSTS[case % 2];
        let got = eval::utility_optimal_threshold(&vector, &confidences, c).unwrap();
        let mut best_t = 0.0;
        let mut best_cost = f64::INFINITY;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let above = confidences.iter().filter(|&&x| x >= t).count() as f64;
            let cost = (1.0 - brute::interpolate(&values, t)) * above
                + c * (confidences.len() as f64 - above);
            if cost < best_cost {
                best_cost = cost;
                best_t = t;
            }
        }
        assert_eq!(got, best_t, "case {case}");
    }

    // Directional comparison on the benchmark.
    let bench = &*BENCHMARK;
    let (methods, slices) = benchmark_method_vectors(bench);
    let (_, test) = &bench.datasets[&20];
    for &cost in &COSTS {
        let mut means: BTreeMap<&'static str, f64> = BTreeMap::new();
        let abstain: f64 = slices
            .iter()
            .map(|s| eval::realized_utility(2.0, s, cost).unwrap())
            .sum::<f64>()
            / slices.len() as f64;
        means.insert("abstain", abstain);
        for (name, vectors) in &methods {
            let mut total = 0.0;
            for ((vector, slice), task) in vectors.iter().zip(&slices).zip(test) {
                let confidences: Vec<f64> = bench
                    .corpus
                    .records_by_ids(task.eval_record_ids.iter().map(String::as_str))
                    .unwrap()
                    .iter()
                    .map(|r| r.confidence)
                    .collect();
                let t = eval::utility_optimal_threshold(vector, &confidences, cost).unwrap();
                total += eval::realized_utility(t, slice, cost).unwrap();
            }
            means.insert(name, total / slices.len() as f64);
        }
        let fsc = means["fsc"];
        for name in ["abstain", "sample-avg", "domain-avg", "empirical"] {
            assert!(
                fsc >= means[name],
                "cost {cost}: fsc {fsc} vs {name} {}",
                means[name]
            );
        }
    }
    pass("10 utility");
}

#[test]
fn criterion_11_fewshot_size_trend() {
    let bench = &*BENCHMARK;
    let mut successes = Vec::new();
    for k in slicecal::cli::ABLATION_KS {
        let (_, test) = &bench.datasets[&k];
        let slices: Vec<Vec<Outcome>> = test
            .iter()
            .map(|t| slice_outcomes(&bench.corpus, t))
            .collect();
        let preds: Vec<PrecisionVector> = test
            .iter()
            .map(|t| bench.models_b5[&k].predict(&t.fewshot_features).unwrap())
            .collect();
        let (success, _) = success_rate_and_recall(&preds, &slices, 0.9);
        successes.push((k, success));
    }
    for pair in successes.windows(2) {
        let ((k_prev, prev), (k_next, next)) = (pair[0], pair[1]);
        assert!(
            next >= prev - 0.02 - 1e-9,
            "success dropped beyond the noise band: k={k_prev} {prev} -> k={k_next} {next}"
        );
    }
    pass("11 fewshot-size-trend");
}

#[test]
fn criterion_12_byte_identical_reruns() {
    let run = |dir: &Path| {
        let arg = |p: &Path| p.to_str().unwrap().to_string();
        let log = dir.join("bench.jsonl");
        let data = dir.join("data");
        let model = dir.join("model.json");
        let evals = dir.join("eval");
        let common = [
            "--seed",
            "13",
            "--n",
            "120",
            "--k",
            "10",
            "--train-count",
            "150",
            "--test-count",
            "30",
            "--steps",
            "200",
        ];
        let runs: Vec<Vec<String>> = vec![
            vec![
                "gen-logs".into(),
                "--kind".into(),
                "benchmark".into(),
                "--size".into(),
                "400".into(),
                "--out".into(),
                arg(&log),
            ],
            ["synthesize", "--log", &arg(&log), "--out-dir", &arg(&data)]
                .iter()
                .map(|s| s.to_string())
                .chain(common.iter().map(|s| s.to_string()))
                .collect(),
            [
                "train",
                "--tasks",
                &arg(&data.join("tasks_train.jsonl")),
                "--out",
                &arg(&model),
            ]
            .iter()
            .map(|s| s.to_string())
            .chain(common.iter().map(|s| s.to_string()))
            .collect(),
            [
                "predict",
                "--model",
                &arg(&model),
                "--tasks",
                &arg(&data.join("tasks_test.jsonl")),
                "--out",
                &arg(&dir.join("preds.csv")),
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            [
                "eval-precision",
                "--log",
                &arg(&log),
                "--tasks",
                &arg(&data.join("tasks_test.jsonl")),
                "--model",
                &arg(&model),
                "--out-dir",
                &arg(&evals),
            ]
            .iter()
            .map(|s| s.to_string())
            .chain(common.iter().map(|s| s.to_string()))
            .collect(),
            [
                "eval-ece",
                "--log",
                &arg(&log),
                "--tasks",
                &arg(&data.join("tasks_test.jsonl")),
                "--model",
                &arg(&model),
                "--out-dir",
                &arg(&evals),
            ]
            .iter()
            .map(|s| s.to_string())
            .chain(common.iter().map(|s| s.to_string()))
            .collect(),
            [
                "eval-utility",
                "--log",
                &arg(&log),
                "--tasks",
                &arg(&data.join("tasks_test.jsonl")),
                "--model",
                &arg(&model),
                "--out-dir",
                &arg(&evals),
            ]
            .iter()
            .map(|s| s.to_string())
            .chain(common.iter().map(|s| s.to_string()))
            .collect(),
        ];
        for args in runs {
            slicecal::run(std::iter::once("slicecal".to_string()).chain(args)).unwrap();
        }
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run(dir_a.path());
    run(dir_b.path());

    for rel in [
        "bench.jsonl",
        "data/tasks_train.jsonl",
        "data/tasks_test.jsonl",
        "model.json",
        "model.train_log.csv",
        "preds.csv",
        "eval/precision_report.csv",
        "eval/precision_report.txt",
        "eval/ece_report.csv",
        "eval/ece_report.txt",
        "eval/utility_report.csv",
        "eval/utility_report.txt",
    ] {
        let a = std::fs::read(dir_a.path().join(rel)).unwrap();
        let b = std::fs::read(dir_b.path().join(rel)).unwrap();
        assert_eq!(a, b, "{rel} differs between identical runs");
    }
    pass("12 byte-identical-reruns");
}
