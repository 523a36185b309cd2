//! k-means and DBSCAN over feature rows.

mod dbscan;
mod kmeans;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dbscan::{dbscan_fit, DbscanConfig};
pub use kmeans::{kmeans_fit, Distance, KMeansConfig};

/// Label of DBSCAN points no core point reaches.
pub const NOISE: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub row_ids: Vec<String>,
    pub labels: Vec<i64>,
    pub centroids: Option<Vec<Vec<f64>>>,
    pub inertia: Option<f64>,
    /// Inertia after each assignment step (k-means only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inertia_trace: Vec<f64>,
    /// Which rows are core points (DBSCAN only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_points: Option<Vec<bool>>,
}

impl ClusterAssignment {
    /// Number of distinct non-noise labels.
    pub fn cluster_count(&self) -> usize {
        let mut seen: Vec<i64> = self.labels.iter().copied().filter(|&l| l != NOISE).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Row indices per label, noise excluded, in label order.
    pub fn members(&self) -> Vec<(i64, Vec<usize>)> {
        let mut by: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
        for (i, &l) in self.labels.iter().enumerate() {
            if l != NOISE {
                by.entry(l).or_default().push(i);
            }
        }
        by.into_iter().collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row_id", "label"])?;
        for (id, l) in self.row_ids.iter().zip(&self.labels) {
            w.write_record([id.clone(), l.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ClusterError {
    #[error("feature matrix has no rows")]
    EmptyMatrix,
    #[error("k = {k} exceeds the {distinct} distinct rows")]
    KTooLarge { k: usize, distinct: usize },
    #[error("invalid parameter {0}: {1}")]
    InvalidParam(&'static str, String),
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
