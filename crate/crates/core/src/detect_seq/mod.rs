//! Next-event prediction over event-id sequences and the top-k rule: an event
//! is anomalous when it is not among the k most likely successors of its
//! preceding context.

mod ngram;
mod topk;

use thiserror::Error;

pub use ngram::{ngram_fit, NextEventModel};
pub use topk::{anomalous_positions, detect_sequence, FlagLevel, TopKConfig};

/// Anything that ranks candidate next events for a context.
pub trait NextEventPredictor: Sync {
    /// Longest context the predictor looks at.
    fn order(&self) -> usize;
    /// At most `k` ids, most likely first.
    fn predict_topk(&self, context: &[u32], k: usize) -> Result<Vec<u32>, SeqError>;
}

#[derive(Debug, Error, PartialEq)]
pub enum SeqError {
    #[error("training set has no events")]
    EmptyTraining,
    #[error("order must be at least 1")]
    ZeroOrder,
    #[error("no context, not even the unigram table, has counts")]
    UnknownAllContexts,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("model file line {0}: {1}")]
    BadModelLine(usize, String),
}
