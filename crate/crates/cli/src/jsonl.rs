//! JSON-lines prediction logs, task files, and model files.
//!
//! A prediction log is UTF-8 with one JSON object per line carrying exactly
//! the fields `id`, `domain`, `confidence`, `probs`, `correct`, `features`
//! (the latter two of `probs`/`features` optional). Parse errors report the
//! offending line; invariant violations name the field and record.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use slicecal_core::recalibrator::{RecalibratorParams, TrainConfig, TrainError};
use slicecal_core::records::{Corpus, PredictionRecord, RecordError};
use slicecal_core::slices::TaskInstance;

/// Errors from reading or writing the toolkit's file formats.
#[derive(Debug, thiserror::Error)]
pub enum FileError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: {source}")]
    Invalid {
        path: PathBuf,
        line: usize,
        source: RecordError,
    },
    #[error("{path}: {source}")]
    Corpus { path: PathBuf, source: RecordError },
    #[error("{path}: {source}")]
    Model { path: PathBuf, source: TrainError },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses and validates a JSON-lines prediction log.
///
/// Blank lines are tolerated; everything else must be a record object. Each
/// record is validated as it is read so diagnostics carry line numbers;
/// duplicate ids and mismatched feature dimensions are caught across lines.
pub fn parse_log(path: &Path) -> Result<Corpus, FileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut records: Vec<PredictionRecord> = Vec::new();
    let mut seen_ids = std::collections::BTreeSet::new();
    let mut feature_dim: Option<usize> = None;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| FileError::Malformed {
                path: path.to_path_buf(),
                line: line_no,
                message: e.to_string(),
            })?;
        let invalid = |source: RecordError| FileError::Invalid {
            path: path.to_path_buf(),
            line: line_no,
            source,
        };
        record.validate().map_err(invalid)?;
        if !seen_ids.insert(record.id.clone()) {
            return Err(invalid(RecordError::DuplicateId { id: record.id }));
        }
        if let Some(features) = &record.features {
            match feature_dim {
                None => feature_dim = Some(features.len()),
                Some(expected) if expected != features.len() => {
                    return Err(invalid(RecordError::FeatureDimMismatch {
                        id: record.id.clone(),
                        expected,
                        got: features.len(),
                    }));
                }
                Some(_) => {}
            }
        }
        records.push(record);
    }
    Corpus::new(records).map_err(|source| FileError::Corpus {
        path: path.to_path_buf(),
        source,
    })
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), FileError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut writer = BufWriter::new(file);
    for item in items {
        let line = serde_json::to_string(item).expect("toolkit types serialize infallibly");
        writer.write_all(line.as_bytes()).map_err(io_err(path))?;
        writer.write_all(b"\n").map_err(io_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

/// Writes a corpus back out as JSON-lines, one record per line in order.
pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<(), FileError> {
    write_lines(path, corpus.records())
}

/// Writes tasks as JSON-lines, one task per line.
pub fn write_tasks(path: &Path, tasks: &[TaskInstance]) -> Result<(), FileError> {
    write_lines(path, tasks)
}

/// Reads a JSON-lines task file.
pub fn read_tasks(path: &Path) -> Result<Vec<TaskInstance>, FileError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader = BufReader::new(file);
    let mut tasks = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let task: TaskInstance = serde_json::from_str(&line).map_err(|e| FileError::Malformed {
            path: path.to_path_buf(),
            line: index + 1,
            message: e.to_string(),
        })?;
        tasks.push(task);
    }
    Ok(tasks)
}

/// A trained recalibrator on disk: the training config that produced it plus
/// the versioned parameters.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ModelFile {
    pub config: TrainConfig,
    pub params: RecalibratorParams,
}

pub fn write_model(path: &Path, model: &ModelFile) -> Result<(), FileError> {
    let json = serde_json::to_string(model).expect("model serializes infallibly");
    std::fs::write(path, json + "\n").map_err(io_err(path))
}

/// Reads a model file, rejecting parameter-format version mismatches.
pub fn read_model(path: &Path) -> Result<ModelFile, FileError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let model: ModelFile = serde_json::from_str(&text).map_err(|e| FileError::Malformed {
        path: path.to_path_buf(),
        line: 1,
        message: e.to_string(),
    })?;
    model
        .params
        .check_version()
        .map_err(|source| FileError::Model {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(model)
}
