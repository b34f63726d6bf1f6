//! Earnings surprises and their regression on expression weights.

mod mlogit;
mod panel;
mod rank;
mod sue;

use thiserror::Error;

pub use mlogit::{
    category_probabilities, fit_mlogit, model_cov, sandwich_cov, wald_p, wald_test, CovFlavor, MlogitConfig,
    MlogitFit, CATEGORIES, INTERCEPT,
};
pub use panel::{
    design_matrix, doc_key, merge_firm_years, read_earnings, sue_table, write_earnings, Design, EarningsRow,
    FirmYear, MergeReport, Panel, PanelConfig, CONTROL_NAMES,
};
pub use rank::{
    polarity_table, rank_from, rank_mwe, read_polarity, Rank, RankResult, RegressionReport, Significance,
    VariableKind,
};
pub use sue::{categorize, compute_sue, compute_sue_gapped};

#[derive(Debug, Error)]
pub enum EconError {
    #[error("need at least two earnings changes, found {0}")]
    InsufficientHistory(usize),
    #[error("earnings changes have zero variance")]
    DegenerateSeries,
    #[error("SUE is missing")]
    MissingSue,
    #[error("threshold must be positive, got {0}")]
    InvalidTau(f64),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("duplicate earnings row for {0} {1}")]
    DuplicateKey(String, i32),
    #[error("unknown control '{0}'")]
    UnknownControl(String),
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("outcome {0} is not -1, 0 or 1")]
    BadOutcome(i8),
    #[error("{rows} observations for {columns} parameters per equation")]
    TooFewObservations { rows: usize, columns: usize },
    #[error("column '{0}' is collinear with earlier columns")]
    RankDeficient(String),
    #[error("likelihood is unbounded along column '{0}'")]
    Separation(String),
    #[error("information matrix is singular")]
    SingularInformation,
    #[error("no convergence after {iterations} iterations (gradient {gradient:e})")]
    NotConverged { iterations: usize, gradient: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("earnings file: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
