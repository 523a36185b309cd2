//! Body cleaning and partitioning of a batch into analysis units.

mod clean;
mod partition;

pub use clean::{clean, CleanError, ExtractionTable, Preprocessor, PreprocessorConfig, ReplaceRule};
pub use partition::{partition, Partition, PartitionConfig, PartitionError, PartitionSet, PartitionStrategy};
