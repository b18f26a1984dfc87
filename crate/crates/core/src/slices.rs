//! Synthetic slice construction: weighted domain mixtures with ground-truth
//! precision targets, packaged as few-shot tasks.
//!
//! A slice is a mixture `sum_i alpha_i * p_i` over a corpus's domains. One
//! task samples a slice spec (geometric number of domains, Dirichlet
//! weights), draws `n` records from the mixture, computes the slice's exact
//! precision vector as the training target, and keeps `k` of the records as
//! the *unlabeled* few-shot view the recalibrator conditions on.
//!
//! Everything here is a deterministic function of `(corpus, config, seed)`:
//! each task derives its own generator by seeding from the dataset seed and
//! selecting the task index as the ChaCha stream, so parallel and sequential
//! construction produce identical datasets.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{CurveError, PrecisionCurve, PrecisionVector};
use crate::math;
use crate::records::{Corpus, PredictionRecord, RecordError};

/// Success probability of the geometric draw for the number of mixture
/// components.
pub const GEOMETRIC_P: f64 = 0.2;

/// How many fresh spec draws a holdout conflict is allowed before erroring.
pub const HOLDOUT_RETRY_BOUND: usize = 100;

/// Errors from slice sampling and task construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SliceError {
    #[error("no domains available to sample from")]
    EmptyDomainList,
    #[error("slice spec has no components")]
    EmptyComponents,
    #[error("domain {domain} appears twice in a slice spec")]
    DuplicateComponent { domain: String },
    #[error("component weight {weight} for {domain} is not positive")]
    NonPositiveWeight { domain: String, weight: f64 },
    #[error("component weights sum to {sum}, expected 1 within 1e-9")]
    WeightSumMismatch { sum: f64 },
    #[error("domain {domain} does not exist in the corpus")]
    UnknownDomain { domain: String },
    #[error("domain {domain} has no records available for sampling")]
    EmptyDomain { domain: String },
    #[error("slice size must be at least 1")]
    EmptySlice,
    #[error("few-shot size {k} exceeds slice size {n}")]
    FewShotTooLarge { k: usize, n: usize },
    #[error("record {id} carries no features; the few-shot view requires them")]
    MissingFeatures { id: String },
    #[error("could not sample a spec compatible with the holdout after {retries} attempts")]
    HoldoutConflict { retries: usize },
    #[error("held-out domains exhaust the corpus")]
    AllDomainsHeldOut,
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// A weighted domain mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SliceSpec {
    components: Vec<(String, f64)>,
}

impl SliceSpec {
    /// Validates distinct domains and positive weights summing to one
    /// (within 1e-9). Components are stored sorted by domain label.
    pub fn new(mut components: Vec<(String, f64)>) -> Result<Self, SliceError> {
        if components.is_empty() {
            return Err(SliceError::EmptyComponents);
        }
        components.sort_by(|a, b| a.0.cmp(&b.0));
        for w in components.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(SliceError::DuplicateComponent {
                    domain: w[0].0.clone(),
                });
            }
        }
        let mut sum = 0.0;
        for (domain, weight) in &components {
            if !weight.is_finite() || *weight <= 0.0 {
                return Err(SliceError::NonPositiveWeight {
                    domain: domain.clone(),
                    weight: *weight,
                });
            }
            sum += weight;
        }
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(SliceError::WeightSumMismatch { sum });
        }
        Ok(Self { components })
    }

    /// `(domain, weight)` pairs, sorted by domain label.
    pub fn components(&self) -> &[(String, f64)] {
        &self.components
    }

    pub fn num_domains(&self) -> usize {
        self.components.len()
    }
}

/// One training or evaluation example for the recalibrator.
///
/// The few-shot view carries only record ids and feature vectors (no
/// correctness, confidence, or probability fields), so it cannot leak labels
/// to the model. The eval record ids are retained for evaluation only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub spec: SliceSpec,
    pub fewshot_features: Vec<Vec<f64>>,
    pub fewshot_record_ids: Vec<String>,
    pub target: PrecisionVector,
    pub eval_record_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exhausted_domains: Vec<String>,
}

/// Records drawn for one slice, as indices into the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSample {
    pub record_indices: Vec<usize>,
    /// Domains whose pool ran dry, falling back to with-replacement draws.
    pub exhausted_domains: Vec<String>,
}

/// Derives an independent sub-seed from a base seed and a salt
/// (splitmix64 finalizer).
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Geometric draw on support {1, 2, ...}: number of Bernoulli(p) trials up
/// to and including the first success.
fn geometric<R: Rng>(rng: &mut R, p: f64) -> usize {
    let mut m = 1;
    while rng.gen::<f64>() >= p {
        m += 1;
    }
    m
}

/// Standard exponential draw via inversion; the underlying uniform is
/// resampled away from zero so the result is finite and positive.
fn exponential<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return -math::ln(u);
        }
    }
}

/// Samples a slice spec: the number of components is Geometric(0.2) clamped
/// to the number of available domains, the components are drawn uniformly
/// without replacement, and the weights are Dirichlet(1, ..., 1):
/// i.i.d. exponentials, normalized.
pub fn sample_spec<R: Rng>(domains: &[String], rng: &mut R) -> Result<SliceSpec, SliceError> {
    if domains.is_empty() {
        return Err(SliceError::EmptyDomainList);
    }
    let m = geometric(rng, GEOMETRIC_P).min(domains.len());
    let chosen = rand::seq::index::sample(rng, domains.len(), m);
    let raw: Vec<f64> = (0..m).map(|_| exponential(rng)).collect();
    let total: f64 = raw.iter().sum();
    let components = chosen
        .iter()
        .zip(&raw)
        .map(|(i, &e)| (domains[i].clone(), e / total))
        .collect();
    SliceSpec::new(components)
}

/// Per-domain sampling state: the shrinking without-replacement pool plus
/// the frozen full pool used for with-replacement fallback.
struct DomainPool {
    remaining: Vec<usize>,
    full: Vec<usize>,
}

fn make_pools(
    corpus: &Corpus,
    spec: &SliceSpec,
    base: &BTreeMap<String, Vec<usize>>,
) -> Result<Vec<DomainPool>, SliceError> {
    spec.components()
        .iter()
        .map(|(domain, _)| {
            if !corpus.domains().contains_key(domain) {
                return Err(SliceError::UnknownDomain {
                    domain: domain.clone(),
                });
            }
            let indices = base.get(domain).ok_or_else(|| SliceError::UnknownDomain {
                domain: domain.clone(),
            })?;
            if indices.is_empty() {
                return Err(SliceError::EmptyDomain {
                    domain: domain.clone(),
                });
            }
            Ok(DomainPool {
                remaining: indices.clone(),
                full: indices.clone(),
            })
        })
        .collect()
}

fn sample_slice_from_pools<R: Rng>(
    spec: &SliceSpec,
    pools: &mut [DomainPool],
    n: usize,
    rng: &mut R,
) -> Result<SliceSample, SliceError> {
    if n == 0 {
        return Err(SliceError::EmptySlice);
    }
    let weights: Vec<f64> = spec.components().iter().map(|(_, w)| *w).collect();
    let mut record_indices = Vec::with_capacity(n);
    let mut exhausted: BTreeSet<String> = BTreeSet::new();
    for _ in 0..n {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut c = weights.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                c = i;
                break;
            }
        }
        let pool = &mut pools[c];
        let idx = if pool.remaining.is_empty() {
            exhausted.insert(spec.components()[c].0.clone());
            pool.full[rng.gen_range(0..pool.full.len())]
        } else {
            let j = rng.gen_range(0..pool.remaining.len());
            pool.remaining.swap_remove(j)
        };
        record_indices.push(idx);
    }
    Ok(SliceSample {
        record_indices,
        exhausted_domains: exhausted.into_iter().collect(),
    })
}

/// Draws `n` records from the mixture: each draw picks a domain by its
/// weight, then a record uniformly without replacement within that domain.
/// A domain that runs dry falls back to with-replacement draws and is
/// flagged in the sample's metadata.
pub fn sample_slice<R: Rng>(
    corpus: &Corpus,
    spec: &SliceSpec,
    n: usize,
    rng: &mut R,
) -> Result<SliceSample, SliceError> {
    let mut pools = make_pools(corpus, spec, corpus.domains())?;
    sample_slice_from_pools(spec, &mut pools, n, rng)
}

fn build_task_with_pools<R: Rng>(
    corpus: &Corpus,
    spec: &SliceSpec,
    n: usize,
    k: usize,
    rng: &mut R,
    base: &BTreeMap<String, Vec<usize>>,
) -> Result<TaskInstance, SliceError> {
    if k > n {
        return Err(SliceError::FewShotTooLarge { k, n });
    }
    let mut pools = make_pools(corpus, spec, base)?;
    let sample = sample_slice_from_pools(spec, &mut pools, n, rng)?;
    let outcomes: Vec<_> = sample
        .record_indices
        .iter()
        .map(|&i| corpus.records()[i].outcome())
        .collect();
    let target = PrecisionCurve::from_outcomes(&outcomes)?.sample_vector();
    let eval_record_ids: Vec<String> = sample
        .record_indices
        .iter()
        .map(|&i| corpus.records()[i].id.clone())
        .collect();

    let picks = rand::seq::index::sample(rng, n, k);
    let mut fewshot_features = Vec::with_capacity(k);
    let mut fewshot_record_ids = Vec::with_capacity(k);
    for p in picks.iter() {
        let record: &PredictionRecord = &corpus.records()[sample.record_indices[p]];
        let features = record
            .features
            .as_ref()
            .ok_or_else(|| SliceError::MissingFeatures {
                id: record.id.clone(),
            })?;
        fewshot_features.push(features.clone());
        fewshot_record_ids.push(record.id.clone());
    }
    Ok(TaskInstance {
        spec: spec.clone(),
        fewshot_features,
        fewshot_record_ids,
        target,
        eval_record_ids,
        exhausted_domains: sample.exhausted_domains,
    })
}

/// Samples one slice and packages it as a task: the ground-truth precision
/// vector of the `n` sampled records plus an unlabeled few-shot view of `k`
/// of them (chosen uniformly).
pub fn build_task<R: Rng>(
    corpus: &Corpus,
    spec: &SliceSpec,
    n: usize,
    k: usize,
    rng: &mut R,
) -> Result<TaskInstance, SliceError> {
    build_task_with_pools(corpus, spec, n, k, rng, corpus.domains())
}

/// Construction parameters for a task dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetParams {
    /// Number of tasks to emit.
    pub count: usize,
    /// Records per slice.
    pub n: usize,
    /// Few-shot examples per task.
    pub k: usize,
}

/// Builds `count` independent tasks.
///
/// Task `i` uses a generator seeded with `seed` on ChaCha stream `i`, so the
/// dataset is a pure function of `(corpus, params, seed, holdout)` and tasks
/// can be built in any order or in parallel without changing the result.
///
/// When `holdout` is given, no task samples a record whose id is in it. A
/// spec that lands on a domain the holdout emptied entirely is resampled, up
/// to [`HOLDOUT_RETRY_BOUND`] fresh draws.
pub fn build_dataset(
    corpus: &Corpus,
    params: &DatasetParams,
    seed: u64,
    holdout: Option<&BTreeSet<String>>,
) -> Result<Vec<TaskInstance>, SliceError> {
    let domains = corpus.domain_labels();
    let base: BTreeMap<String, Vec<usize>> = match holdout {
        None => corpus.domains().clone(),
        Some(ids) => corpus
            .domains()
            .iter()
            .map(|(label, indices)| {
                let kept = indices
                    .iter()
                    .copied()
                    .filter(|&i| !ids.contains(&corpus.records()[i].id))
                    .collect();
                (label.clone(), kept)
            })
            .collect(),
    };
    (0..params.count)
        .map(|task_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(task_index as u64);
            for _ in 0..HOLDOUT_RETRY_BOUND {
                let spec = sample_spec(&domains, &mut rng)?;
                if spec
                    .components()
                    .iter()
                    .any(|(d, _)| base.get(d).is_none_or(Vec::is_empty))
                {
                    continue;
                }
                return build_task_with_pools(corpus, &spec, params.n, params.k, &mut rng, &base);
            }
            Err(SliceError::HoldoutConflict {
                retries: HOLDOUT_RETRY_BOUND,
            })
        })
        .collect()
}

/// Splits a corpus into a training part (everything outside the held-out
/// domains) and a test part (only the held-out domains).
pub fn unseen_domain_split(
    corpus: &Corpus,
    held_out: &[String],
) -> Result<(Corpus, Corpus), SliceError> {
    let held: BTreeSet<String> = held_out.iter().cloned().collect();
    for domain in &held {
        if !corpus.domains().contains_key(domain) {
            return Err(SliceError::UnknownDomain {
                domain: domain.clone(),
            });
        }
    }
    if held.len() >= corpus.domains().len() {
        return Err(SliceError::AllDomainsHeldOut);
    }
    let train_labels: BTreeSet<String> = corpus
        .domain_labels()
        .into_iter()
        .filter(|d| !held.contains(d))
        .collect();
    let train = corpus.restricted_to(&train_labels)?;
    let test = corpus.restricted_to(&held)?;
    Ok((train, test))
}
