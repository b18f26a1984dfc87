//! IO, file formats, synthetic corpora, and the command-line front end for
//! the slice-calibration toolkit.
//!
//! The numerical core lives in `slicecal-core`; this crate adds everything
//! that touches the filesystem or a terminal: JSON-lines prediction logs,
//! task and model files, CSV/text reports, SVG reliability diagrams, run
//! manifests, and the `slicecal` binary itself.

pub mod cli;
pub mod config;
pub mod jsonl;
pub mod manifest;
pub mod report;
pub mod svg;
pub mod synth;

pub use cli::{run, CliError};
