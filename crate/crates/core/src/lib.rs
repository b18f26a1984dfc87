//! Core mathematics for slice-specific confidence calibration.
//!
//! A classifier that looks well calibrated on a broad query distribution can
//! still be badly miscalibrated on narrower slices of it: overconfidence in
//! some domains cancels underconfidence in others once everything is pooled.
//! This crate provides the machinery to measure and repair that:
//!
//! - [`records`] — the prediction-log data model: per-prediction confidence,
//!   correctness, domain label, and optional features, partitioned by domain.
//! - [`curves`] — exact precision curves, calibration curves, ECE, the
//!   precision-to-calibration conversion, histogram binning, and temperature
//!   scaling.
//! - [`slices`] — synthetic slice construction: weighted domain mixtures with
//!   ground-truth precision targets, packaged as few-shot tasks.
//! - [`recalibrator`] — a permutation-invariant set regressor that maps a
//!   handful of unlabeled examples from a slice to that slice's predicted
//!   precision curve, trained with an asymmetric squared loss.
//! - [`baselines`] — sample-average, domain-average, empirical, and oracle
//!   reference curves.
//! - [`eval`] — threshold selection for target precision, recalibrated ECE,
//!   pairwise win rates, and abstention-utility metrics.
//!
//! The crate is `no_std` (with `alloc`) and fully deterministic: every
//! stochastic operation takes an explicit seeded generator, and all float
//! transcendentals go through [`libm`] so results do not depend on the host
//! math library.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod curves;
pub mod eval;
pub mod records;
pub mod slices;

pub mod recalibrator;

mod math;

pub use curves::{
    BinMode, BinningScheme, CalibrationCurve, ConfidenceTransform, Outcome, PrecisionCurve,
    PrecisionVector,
};
pub use records::{Corpus, PredictionRecord};
pub use slices::{SliceSpec, TaskInstance};
