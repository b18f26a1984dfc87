//! The few-shot recalibrator: a permutation-invariant set regressor that
//! maps `k` unlabeled feature vectors to a predicted precision vector.
//!
//! The model mean-pools the feature vectors (order-independent by
//! construction), applies two affine layers with a tanh in between, and
//! squashes the ten outputs through a sigmoid so the prediction is always a
//! valid precision vector. The encoder is deliberately minimal; anything
//! that produces a pooled feature vector can stand in for it upstream by
//! writing richer `features` into the prediction log.
//!
//! Training minimizes an asymmetric squared loss: over-estimating precision
//! at a threshold is penalized `beta` times more than under-estimating it,
//! because an over-estimate picks a threshold that fails to trigger
//! abstention when it should, while an under-estimate merely costs recall.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::PrecisionVector;
use crate::math;
use crate::slices::TaskInstance;

/// Serialized-parameter format version; loaders reject anything else.
pub const PARAMS_VERSION: u32 = 1;

/// The regression head always predicts the ten anchor precisions.
pub const OUTPUT_DIM: usize = 10;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Errors from encoding, prediction, and training.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("few-shot set is empty")]
    EmptyFewShot,
    #[error("feature dimension {got} does not match expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training requires at least one task")]
    NoTasks,
    #[error("gradient batch is empty")]
    EmptyBatch,
    #[error("asymmetry coefficient must be >= 1, got {beta}")]
    InvalidBeta { beta: f64 },
    #[error("step count must be >= 1")]
    NoSteps,
    #[error("batch size must be >= 1")]
    InvalidBatchSize,
    #[error("learning rate must be positive and finite, got {value}")]
    InvalidLearningRate { value: f64 },
    #[error("hidden dimension must be >= 1")]
    InvalidHiddenDim,
    #[error("non-finite loss {loss} at step {step}; aborting")]
    NonFiniteLoss { step: usize, loss: f64 },
    #[error("parameter file version {got} unsupported (expected {expected})")]
    VersionMismatch { expected: u32, got: u32 },
}

/// Weights of the set-encoder regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecalibratorParams {
    pub version: u32,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// First affine layer, `hidden_dim x input_dim`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Output affine layer, `OUTPUT_DIM x hidden_dim`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl RecalibratorParams {
    /// Uniform `±1/sqrt(fan_in)` weight init with zero biases.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let mut uniform = |fan_in: usize, len: usize| -> Vec<f64> {
            let bound = 1.0 / math::sqrt(fan_in as f64);
            (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
        };
        let w1 = uniform(input_dim, hidden_dim * input_dim);
        let w2 = uniform(hidden_dim, OUTPUT_DIM * hidden_dim);
        Self {
            version: PARAMS_VERSION,
            input_dim,
            hidden_dim,
            w1,
            b1: vec![0.0; hidden_dim],
            w2,
            b2: vec![0.0; OUTPUT_DIM],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Rejects parameters serialized under a different format version.
    pub fn check_version(&self) -> Result<(), TrainError> {
        if self.version != PARAMS_VERSION {
            return Err(TrainError::VersionMismatch {
                expected: PARAMS_VERSION,
                got: self.version,
            });
        }
        Ok(())
    }

    /// Predicts the precision vector for a few-shot feature set.
    ///
    /// Deterministic, and invariant under any permutation of the set.
    pub fn predict(&self, features: &[Vec<f64>]) -> Result<PrecisionVector, TrainError> {
        let pooled = encode_fewshot(features)?;
        let pass = self.forward(&pooled)?;
        Ok(PrecisionVector::new(pass.output).expect("sigmoid keeps outputs in [0, 1]"))
    }

    fn forward(&self, pooled: &[f64]) -> Result<ForwardPass, TrainError> {
        if pooled.len() != self.input_dim {
            return Err(TrainError::DimensionMismatch {
                expected: self.input_dim,
                got: pooled.len(),
            });
        }
        let h = self.hidden_dim;
        let d = self.input_dim;
        let mut hidden = vec![0.0; h];
        for j in 0..h {
            let mut acc = self.b1[j];
            for (i, &x) in pooled.iter().enumerate() {
                acc += self.w1[j * d + i] * x;
            }
            hidden[j] = math::tanh(acc);
        }
        let mut output = [0.0; OUTPUT_DIM];
        for c in 0..OUTPUT_DIM {
            let mut acc = self.b2[c];
            for (j, &hj) in hidden.iter().enumerate() {
                acc += self.w2[c * h + j] * hj;
            }
            output[c] = math::sigmoid(acc);
        }
        Ok(ForwardPass { hidden, output })
    }
}

struct ForwardPass {
    hidden: Vec<f64>,
    output: [f64; OUTPUT_DIM],
}

/// Mean-pools a few-shot feature set into a single vector.
///
/// Per dimension the addends are summed in sorted order, so the result is
/// bit-identical under any permutation of the input set.
pub fn encode_fewshot(features: &[Vec<f64>]) -> Result<Vec<f64>, TrainError> {
    let k = features.len();
    if k == 0 {
        return Err(TrainError::EmptyFewShot);
    }
    let dim = features[0].len();
    for f in features {
        if f.len() != dim {
            return Err(TrainError::DimensionMismatch {
                expected: dim,
                got: f.len(),
            });
        }
    }
    let mut pooled = Vec::with_capacity(dim);
    let mut column = vec![0.0; k];
    for i in 0..dim {
        for (slot, f) in column.iter_mut().zip(features) {
            *slot = f[i];
        }
        column.sort_by(f64::total_cmp);
        pooled.push(column.iter().sum::<f64>() / k as f64);
    }
    Ok(pooled)
}

/// Asymmetric squared loss: the mean over the ten thresholds of the squared
/// error, scaled by `beta` wherever the prediction over-estimates the gold
/// precision. At `pred == gold` the symmetric branch applies.
pub fn asymmetric_loss(pred: &PrecisionVector, gold: &PrecisionVector, beta: f64) -> f64 {
    debug_assert!(beta >= 1.0, "asymmetry coefficient must be >= 1");
    let mut total = 0.0;
    for (p, g) in pred.values().iter().zip(gold.values()) {
        let diff = p - g;
        let weight = if p > g { beta } else { 1.0 };
        total += weight * diff * diff;
    }
    total / OUTPUT_DIM as f64
}

/// Parameter-shaped gradient record.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Gradient {
    fn zeros(params: &RecalibratorParams) -> Self {
        Self {
            w1: vec![0.0; params.w1.len()],
            b1: vec![0.0; params.b1.len()],
            w2: vec![0.0; params.w2.len()],
            b2: vec![0.0; params.b2.len()],
        }
    }
}

/// Exact gradient of the mean asymmetric loss over a task batch, together
/// with that loss. The `beta` branch is chosen per coordinate from the
/// forward values; at `pred == gold` the symmetric branch applies.
pub fn loss_gradient(
    params: &RecalibratorParams,
    batch: &[&TaskInstance],
    beta: f64,
) -> Result<(f64, Gradient), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let h = params.hidden_dim;
    let d = params.input_dim;
    let mut grad = Gradient::zeros(params);
    let mut total_loss = 0.0;
    for task in batch {
        let pooled = encode_fewshot(&task.fewshot_features)?;
        if pooled.len() != d {
            return Err(TrainError::DimensionMismatch {
                expected: d,
                got: pooled.len(),
            });
        }
        let pass = params.forward(&pooled)?;
        let gold = task.target.values();

        let mut dz = [0.0; OUTPUT_DIM];
        for c in 0..OUTPUT_DIM {
            let out = pass.output[c];
            let diff = out - gold[c];
            let weight = if out > gold[c] { beta } else { 1.0 };
            total_loss += weight * diff * diff / OUTPUT_DIM as f64;
            let dout = 2.0 * weight * diff / OUTPUT_DIM as f64;
            dz[c] = dout * out * (1.0 - out);
        }
        let mut dhidden = vec![0.0; h];
        for c in 0..OUTPUT_DIM {
            grad.b2[c] += dz[c];
            for j in 0..h {
                grad.w2[c * h + j] += dz[c] * pass.hidden[j];
                dhidden[j] += dz[c] * params.w2[c * h + j];
            }
        }
        for j in 0..h {
            let dpre = dhidden[j] * (1.0 - pass.hidden[j] * pass.hidden[j]);
            grad.b1[j] += dpre;
            for (i, &x) in pooled.iter().enumerate() {
                grad.w1[j * d + i] += dpre * x;
            }
        }
    }
    let scale = 1.0 / batch.len() as f64;
    for g in grad
        .w1
        .iter_mut()
        .chain(&mut grad.b1)
        .chain(&mut grad.w2)
        .chain(&mut grad.b2)
    {
        *g *= scale;
    }
    Ok((total_loss * scale, grad))
}

/// Training hyperparameters.
///
/// The schedule is fixed: mini-batch Adam under cosine learning-rate decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Asymmetry coefficient of the loss (`>= 1`; 1 recovers plain L2).
    pub beta: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 5.0,
            batch_size: 16,
            steps: 4_000,
            learning_rate: 2e-3,
            hidden_dim: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.beta < 1.0 {
            return Err(TrainError::InvalidBeta { beta: self.beta });
        }
        if self.steps == 0 {
            return Err(TrainError::NoSteps);
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidBatchSize);
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::InvalidLearningRate {
                value: self.learning_rate,
            });
        }
        if self.hidden_dim == 0 {
            return Err(TrainError::InvalidHiddenDim);
        }
        Ok(())
    }
}

/// One point of the training curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub loss: f64,
}

/// Final parameters plus the per-step loss log.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: RecalibratorParams,
    pub loss_log: Vec<LossPoint>,
}

/// Trains the recalibrator with mini-batch Adam and cosine learning-rate
/// decay. Deterministic given the config seed: initialization and epoch
/// shuffles come from one ChaCha stream, and batches are visited in order.
pub fn train(tasks: &[TaskInstance], config: &TrainConfig) -> Result<TrainedModel, TrainError> {
    config.validate()?;
    if tasks.is_empty() {
        return Err(TrainError::NoTasks);
    }
    let input_dim = tasks[0]
        .fewshot_features
        .first()
        .ok_or(TrainError::EmptyFewShot)?
        .len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = RecalibratorParams::init(input_dim, config.hidden_dim, &mut rng);
    let mut m = Gradient::zeros(&params);
    let mut v = Gradient::zeros(&params);

    let mut order: Vec<usize> = (0..tasks.len()).collect();
    let mut cursor = tasks.len(); // forces a shuffle before the first batch
    let mut loss_log = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        if cursor >= order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let end = (cursor + config.batch_size).min(order.len());
        let batch: Vec<&TaskInstance> = order[cursor..end].iter().map(|&i| &tasks[i]).collect();
        cursor = end;

        let (loss, grad) = loss_gradient(&params, &batch, config.beta)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { step, loss });
        }
        loss_log.push(LossPoint { step, loss });

        let t = (step + 1) as f64;
        let lr = config.learning_rate
            * 0.5
            * (1.0 + math::cos(core::f64::consts::PI * step as f64 / config.steps as f64));
        let bias1 = 1.0 - libm::pow(ADAM_BETA1, t);
        let bias2 = 1.0 - libm::pow(ADAM_BETA2, t);
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= lr * m_hat / (math::sqrt(v_hat) + ADAM_EPS);
            }
        };
        update(&mut params.w1, &grad.w1, &mut m.w1, &mut v.w1);
        update(&mut params.b1, &grad.b1, &mut m.b1, &mut v.b1);
        update(&mut params.w2, &grad.w2, &mut m.w2, &mut v.w2);
        update(&mut params.b2, &grad.b2, &mut m.b2, &mut v.b2);
    }
    Ok(TrainedModel { params, loss_log })
}
