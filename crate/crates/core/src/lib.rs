//! Log analytics engine: load heterogeneous logs into one record model, clean
//! and partition them, mine templates, build numeric representations, and run
//! clustering and anomaly detection pipelines from a single config document.

pub mod app;
pub mod cluster;
pub mod detect_seq;
pub mod detect_stat;
pub mod evaluate;
pub mod log_model;
pub mod parse;
pub mod preprocess;
pub mod represent;
pub mod service;
pub mod synthetic;

pub use log_model::{LogRecord, LogRecordBatch};

