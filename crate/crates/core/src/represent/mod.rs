//! Numeric views of parsed logs: TF-IDF rows, event-id sequences, template
//! count vectors, categorical codes and time-bucketed counters.

mod categorical;
mod counters;
mod matrix;
mod sequence;
mod tfidf;

use thiserror::Error;

pub use categorical::{encode_categorical, CategoricalEncoding, CategoricalScheme, Codebook};
pub use counters::{extract_counters, CounterSeries};
pub use matrix::FeatureMatrix;
pub use sequence::{encode_quantitative, encode_sequential, EventSequenceSet, QuantWeighting, SequenceCsvError};
pub use tfidf::{smoothed_idf, vectorize_tfidf};

#[derive(Debug, Error, PartialEq)]
pub enum RepresentError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no record has field `{0}`")]
    UnknownField(String),
    #[error("{0} records have no timestamp")]
    MissingTimestamps(usize),
    #[error("per-template counters need a parse result")]
    MissingParse,
    #[error("bucket width must be positive")]
    ZeroBucket,
}
