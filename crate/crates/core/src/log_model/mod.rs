//! Unified log record model and file loaders.

mod adapter;
mod batch;
mod canonical;
mod loader;
mod record;

pub use adapter::{
    adapt_dataset, read_label_sidecar, AdaptError, AdaptOutcome, AdapterName, DatasetAdapter, LabelSource,
    HDFS_BLOCK_PATTERN,
};
pub use batch::LogRecordBatch;
pub use canonical::{
    decode_attributes, encode_attributes, read_canonical, write_canonical, CanonicalError, CANONICAL_HEADER,
};
pub use loader::{load_file, load_str, parse_timestamp, FileFormat, LoadError, LoadOutcome, LoaderConfig};
pub use record::{parse_label, LogRecord, RecordField, UnknownRecordField};
