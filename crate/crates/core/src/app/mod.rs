//! Config-driven applications: summarization, clustering, anomaly detection
//! and benchmarking, all run from one [`JobSpec`].

mod pipeline;
mod report;
mod spec;

pub use pipeline::{run_benchmark, run_job, JobError};
pub use report::{config_echo, flatten_json, parse_report_text, JobReport};
pub use spec::{AnalysisSpec, Application, FieldError, JobSpec, RepresentationSpec, TfidfDocuments};
