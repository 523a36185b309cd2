use std::io::Write;

use chrono::{SecondsFormat, TimeZone, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_model::LogRecordBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    FixedWindow,
    SlidingWindow,
    TimeWindow,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionConfig {
    pub strategy: PartitionStrategy,
    /// Events per window (fixed and sliding).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_size: Option<usize>,
    /// Events between sliding window starts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    /// Window length for `time_window`, in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_secs: Option<u64>,
    #[serde(default)]
    pub min_partition_len: usize,
}

impl PartitionConfig {
    pub fn fixed(window_size: usize) -> Self {
        PartitionConfig {
            strategy: PartitionStrategy::FixedWindow,
            window_size: Some(window_size),
            step: None,
            duration_secs: None,
            min_partition_len: 0,
        }
    }

    pub fn sliding(window_size: usize, step: usize) -> Self {
        PartitionConfig {
            strategy: PartitionStrategy::SlidingWindow,
            step: Some(step),
            ..Self::fixed(window_size)
        }
    }

    pub fn time_window(duration_secs: u64) -> Self {
        PartitionConfig {
            strategy: PartitionStrategy::TimeWindow,
            window_size: None,
            step: None,
            duration_secs: Some(duration_secs),
            min_partition_len: 0,
        }
    }

    pub fn identifier() -> Self {
        PartitionConfig {
            strategy: PartitionStrategy::Identifier,
            window_size: None,
            step: None,
            duration_secs: None,
            min_partition_len: 0,
        }
    }

    /// Field-level problems with this config, as `(field, message)` pairs.
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        match self.strategy {
            PartitionStrategy::FixedWindow | PartitionStrategy::SlidingWindow => match self.window_size {
                None => out.push(("window_size", "required for window strategies".to_string())),
                Some(0) => out.push(("window_size", "must be positive".to_string())),
                Some(_) => {}
            },
            _ => {}
        }
        if self.strategy == PartitionStrategy::SlidingWindow {
            match (self.step, self.window_size) {
                (None, _) => out.push(("step", "required for sliding_window".to_string())),
                (Some(0), _) => out.push(("step", "must be positive".to_string())),
                (Some(s), Some(w)) if s > w => out.push(("step", format!("step {s} exceeds window_size {w}"))),
                _ => {}
            }
        }
        if self.strategy == PartitionStrategy::TimeWindow {
            match self.duration_secs {
                None => out.push(("duration_secs", "required for time_window".to_string())),
                Some(0) => out.push(("duration_secs", "must be positive".to_string())),
                Some(_) => {}
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub id: String,
    /// Strictly increasing batch indices.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSet {
    pub partitions: Vec<Partition>,
    pub strategy_echo: PartitionConfig,
    /// Records left out because they had no entity id (identifier strategy).
    pub skipped_records: usize,
}

impl PartitionSet {
    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.partitions.iter().map(|p| p.id.clone()).collect()
    }

    /// A partition is anomalous if any member is; unlabeled if no member has a label.
    pub fn labels(&self, batch: &LogRecordBatch) -> Vec<Option<bool>> {
        let labels = batch.labels();
        self.partitions
            .iter()
            .map(|p| {
                p.members.iter().fold(None, |acc, &i| match (acc, labels[i]) {
                    (Some(true), _) | (_, Some(true)) => Some(true),
                    (Some(false), _) | (_, Some(false)) => Some(false),
                    _ => None,
                })
            })
            .collect()
    }

    /// csv `partition_id,member_indices`, indices space-separated.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["partition_id", "member_indices"])?;
        for p in &self.partitions {
            let members: Vec<String> = p.members.iter().map(usize::to_string).collect();
            w.write_record([p.id.as_str(), members.join(" ").as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PartitionError {
    #[error("invalid partition config: {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },
    #[error("time_window partitioning needs timestamps; {0} records have none")]
    MissingTimestamps(usize),
    #[error("identifier partitioning needs entity ids; no record has one")]
    MissingEntityIds,
}

/// Groups batch indices into analysis units.
pub fn partition(batch: &LogRecordBatch, config: &PartitionConfig) -> Result<PartitionSet, PartitionError> {
    if let Some((field, message)) = config.problems().into_iter().next() {
        return Err(PartitionError::InvalidConfig { field, message });
    }
    let n = batch.len();
    let mut skipped = 0;
    let partitions: Vec<Partition> = match config.strategy {
        PartitionStrategy::FixedWindow => {
            let w = config.window_size.unwrap_or(1);
            (0..n)
                .step_by(w)
                .enumerate()
                .map(|(k, start)| Partition {
                    id: format!("w{k}"),
                    members: (start..(start + w).min(n)).collect(),
                })
                .collect()
        }
        PartitionStrategy::SlidingWindow => {
            let w = config.window_size.unwrap_or(1);
            let step = config.step.unwrap_or(1);
            if n < w {
                Vec::new()
            } else {
                (0..=(n - w) / step)
                    .map(|k| Partition {
                        id: format!("w{k}"),
                        members: (k * step..k * step + w).collect(),
                    })
                    .collect()
            }
        }
        PartitionStrategy::TimeWindow => {
            let missing = batch.timestamps().iter().filter(|t| t.is_none()).count();
            if missing > 0 {
                return Err(PartitionError::MissingTimestamps(missing));
            }
            let dur_ms = config.duration_secs.unwrap_or(1) as i64 * 1000;
            let mut buckets: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
            for (i, ts) in batch.timestamps().iter().enumerate() {
                let ms = ts.expect("checked above").timestamp_millis();
                buckets.entry(ms.div_euclid(dur_ms)).or_default().push(i);
            }
            buckets
                .into_iter()
                .map(|(bucket, members)| {
                    let start = Utc
                        .timestamp_millis_opt(bucket * dur_ms)
                        .single()
                        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
                        .unwrap_or_else(|| bucket.to_string());
                    Partition { id: start, members }
                })
                .collect()
        }
        PartitionStrategy::Identifier => {
            let mut groups: IndexMap<&str, Vec<usize>> = IndexMap::new();
            for (i, id) in batch.entity_ids().iter().enumerate() {
                match id {
                    Some(id) => groups.entry(id.as_str()).or_default().push(i),
                    None => skipped += 1,
                }
            }
            if groups.is_empty() && n > 0 {
                return Err(PartitionError::MissingEntityIds);
            }
            groups
                .into_iter()
                .map(|(id, members)| Partition {
                    id: id.to_string(),
                    members,
                })
                .collect()
        }
    };
    let partitions = partitions
        .into_iter()
        .filter(|p| p.members.len() >= config.min_partition_len)
        .collect();
    Ok(PartitionSet {
        partitions,
        strategy_echo: config.clone(),
        skipped_records: skipped,
    })
}
