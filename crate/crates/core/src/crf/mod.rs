//! Linear-chain conditional random fields of order 1 and 2.
//!
//! Attribute matrices are expanded through a [`TemplateSet`] into observation
//! strings, which a [`CrfModel`] resolves against its frozen alphabet.
//! Inference is exact and runs in log space.

mod inference;
mod io;
pub mod lbfgs;
mod model;
mod template;
mod train;

pub use inference::{log_partition, marginals, sequence_score, viterbi, viterbi_with_score};
pub use io::{load_model, model_from_str, model_to_string, save_model, MODEL_VERSION};
pub use model::{CompiledSeq, CrfModel, ObsKey, StopReason, TrainMeta};
pub use template::{instantiate, FeatureTemplate, LabelContext, Observations, TemplateSet, BOS, EOS};
pub use train::{fit, loglik_and_gradient, train, Instance, TrainConfig};

use thiserror::Error;

use crate::features::AttributeMatrix;

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("template uses attribute '{0}', which the matrix does not provide")]
    UnknownAttribute(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective became non-finite")]
    NonFiniteObjective,
    #[error("training set is empty")]
    EmptyDataset,
    #[error("label '{0}' is not in the model's alphabet")]
    UnknownLabel(String),
    #[error("sequence {index}: {tokens} tokens but {labels} labels")]
    LengthMismatch {
        index: usize,
        tokens: usize,
        labels: usize,
    },
    #[error("model format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Decodes one attribute matrix to label strings.
pub fn tag(model: &CrfModel, matrix: &AttributeMatrix) -> Result<Vec<String>, CrfError> {
    if matrix.is_empty() {
        return Ok(Vec::new());
    }
    let seq = model.compile(matrix)?;
    Ok(viterbi(model, &seq)
        .into_iter()
        .map(|i| model.labels()[i].clone())
        .collect())
}
