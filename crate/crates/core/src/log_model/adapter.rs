use std::collections::HashMap;
use std::path::PathBuf;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::batch::LogRecordBatch;
use super::record::parse_label;

/// Default HDFS block identifier pattern.
pub const HDFS_BLOCK_PATTERN: &str = r"blk_-?\d+";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdapterName {
    Hdfs,
    Bgl,
    #[default]
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Labels were already loaded through the loader's field map.
    #[default]
    Column,
    /// A two-column `id,label` file keyed by entity id.
    SidecarFile,
    /// BGL convention: a leading `-` marks a normal line, anything else an alert.
    SeverityPrefix,
}

/// Dataset-specific post-processing: entity id extraction and label attachment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DatasetAdapter {
    #[serde(default)]
    pub name: AdapterName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id_pattern: Option<String>,
    #[serde(default)]
    pub label_source: LabelSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_file: Option<PathBuf>,
}

impl DatasetAdapter {
    /// The HDFS convention: block ids as entities, labels from `anomaly_label.csv`.
    pub fn hdfs(label_file: impl Into<PathBuf>) -> Self {
        DatasetAdapter {
            name: AdapterName::Hdfs,
            id_pattern: Some(HDFS_BLOCK_PATTERN.to_string()),
            label_source: LabelSource::SidecarFile,
            label_file: Some(label_file.into()),
        }
    }

    pub fn bgl() -> Self {
        DatasetAdapter {
            name: AdapterName::Bgl,
            id_pattern: None,
            label_source: LabelSource::SeverityPrefix,
            label_file: None,
        }
    }

    fn effective_pattern(&self) -> Option<&str> {
        match (&self.id_pattern, self.name) {
            (Some(p), _) => Some(p.as_str()),
            (None, AdapterName::Hdfs) => Some(HDFS_BLOCK_PATTERN),
            (None, _) => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum AdaptError {
    #[error("id_pattern does not compile: {0}")]
    BadPattern(#[from] regex::Error),
    #[error("label file `{0}` is missing")]
    LabelFileMissing(PathBuf),
    #[error("reading label file `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct AdaptOutcome {
    pub batch: LogRecordBatch,
    /// Entities found in the batch but absent from the label source, in first-seen order.
    pub unlabeled_entities: Vec<String>,
}

/// Reads an `id,label` sidecar. A header row is skipped when its label cell is
/// not a recognised label.
pub fn read_label_sidecar(text: &str) -> HashMap<String, bool> {
    let mut labels = HashMap::new();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    for rec in reader.records().flatten() {
        if rec.len() < 2 {
            continue;
        }
        if let Some(label) = parse_label(&rec[1]) {
            labels.insert(rec[0].trim().to_string(), label);
        }
    }
    labels
}

/// Populates `entity_id` from the first `id_pattern` match in each body, then
/// attaches labels according to `label_source`. Only `entity_id` and `label`
/// are touched; applying an adapter twice is the same as applying it once.
pub fn adapt_dataset(batch: &LogRecordBatch, adapter: &DatasetAdapter) -> Result<AdaptOutcome, AdaptError> {
    let mut out = batch.clone();
    if let Some(pattern) = adapter.effective_pattern() {
        let re = Regex::new(pattern)?;
        for i in 0..out.len() {
            if let Some(m) = re.find(&out.bodies()[i]) {
                let id = m.as_str().to_string();
                out.set_entity_id(i, Some(id));
            }
        }
    }

    let mut unlabeled = Vec::new();
    match adapter.label_source {
        LabelSource::Column => {}
        LabelSource::SidecarFile => {
            let path = adapter
                .label_file
                .clone()
                .ok_or_else(|| AdaptError::LabelFileMissing(PathBuf::new()))?;
            if !path.exists() {
                return Err(AdaptError::LabelFileMissing(path));
            }
            let text = std::fs::read_to_string(&path).map_err(|source| AdaptError::Io {
                path: path.clone(),
                source,
            })?;
            let labels = read_label_sidecar(&text);
            let mut seen = std::collections::HashSet::new();
            for i in 0..out.len() {
                let Some(id) = out.entity_ids()[i].clone() else {
                    continue;
                };
                match labels.get(&id) {
                    Some(&l) => out.set_label(i, Some(l)),
                    None => {
                        if seen.insert(id.clone()) {
                            log::warn!("entity {id} has no label");
                            unlabeled.push(id);
                        }
                    }
                }
            }
        }
        LabelSource::SeverityPrefix => {
            for i in 0..out.len() {
                let marker = out.severity_texts()[i]
                    .clone()
                    .or_else(|| out.bodies()[i].split_whitespace().next().map(str::to_string));
                if let Some(m) = marker {
                    out.set_label(i, Some(m != "-"));
                }
            }
        }
    }
    Ok(AdaptOutcome {
        batch: out,
        unlabeled_entities: unlabeled,
    })
}
