//! Asynchronous job execution and the HTTP API used by the portal.

mod http;
mod manager;

pub use http::{router, serve};
pub use manager::{JobListener, JobManager, JobRecord, JobState, ServiceError, DATASET_SCHEME};
