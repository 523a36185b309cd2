//! Train/dev/test splitting and detection metrics.

mod metrics;
mod split;

pub use metrics::{auroc, best_f1_threshold, confusion_and_f1, grouping_accuracy, MetricsError, MetricsReport};
pub use split::{seeded_shuffle, split_dataset, Split, SplitError, SplitProtocol, SplitWarning};

pub use crate::app::run_benchmark;
