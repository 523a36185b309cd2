use std::io::Write;

use serde::{Deserialize, Serialize};

/// Scores per row (higher is more anomalous) with flags `score > threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyResult {
    pub row_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
    pub threshold: f64,
    pub method: String,
}

impl AnomalyResult {
    pub fn from_scores(row_ids: Vec<String>, scores: Vec<f64>, threshold: f64, method: impl Into<String>) -> Self {
        assert_eq!(row_ids.len(), scores.len());
        let flags = scores.iter().map(|&s| s > threshold).collect();
        AnomalyResult {
            row_ids,
            scores,
            flags,
            threshold,
            method: method.into(),
        }
    }

    /// Re-flags against a new threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.flags = self.scores.iter().map(|&s| s > threshold).collect();
        self.threshold = threshold;
        self
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row_id", "score", "flag"])?;
        for ((id, s), f) in self.row_ids.iter().zip(&self.scores).zip(&self.flags) {
            w.write_record([id.clone(), s.to_string(), u8::from(*f).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
