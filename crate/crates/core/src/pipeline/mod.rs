//! Configuration, run logs and the end-to-end commands behind the binary.
//!
//! Every command reads a [`PipelineConfig`], writes its outputs under
//! `paths.out` and leaves a `runlog-<command>.json` next to them.

mod commands;
mod config;
mod runlog;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::*;
pub use config::{AnalysisConfig, FeatureSelection, Paths, PipelineConfig};
pub use runlog::{FileDigest, RunLog};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("input not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("model was trained with features {model} but the config asks for {config}")]
    FeatureMismatch { model: String, config: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Text(#[from] crate::textprep::TextprepError),
    #[error(transparent)]
    Ling(#[from] crate::lingdata::LingError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Crf(#[from] crate::crf::CrfError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Mwe(#[from] crate::mwe::MweError),
    #[error(transparent)]
    Econ(#[from] crate::econ::EconError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
