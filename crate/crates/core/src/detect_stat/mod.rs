//! Outlier scoring on feature rows and residual-based detection on counters.

mod baseline;
mod divergence;
mod iforest;
mod lof;
mod result;

use thiserror::Error;

pub use baseline::{baseline_detect, baseline_scores, BaselineConfig, BaselineMode};
pub use divergence::{divergence, divergence_detect, DivergenceConfig, DivergenceError, DivergenceKind};
pub use iforest::{average_path_length, iforest_fit_score, IForestConfig, IsolationForest};
pub use lof::{lof_score, LocalOutlierFactor, LofConfig};
pub use result::AnomalyResult;

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("k = {k} needs more than {k} rows, got {rows}")]
    KTooLarge { k: usize, rows: usize },
    #[error("series of {len} buckets is not longer than warmup {warmup}")]
    SeriesTooShort { len: usize, warmup: usize },
    #[error("invalid parameter {0}: {1}")]
    InvalidParam(&'static str, String),
    #[error("feature widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
}
