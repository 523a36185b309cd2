use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{squared_distance, ClusterAssignment, ClusterError, NOISE};
use crate::represent::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbscanConfig {
    pub eps: f64,
    pub min_pts: usize,
}

/// Density clustering with closed eps-balls; a point is core when its ball
/// holds at least `min_pts` points, itself included. Clusters grow in row
/// order, so a border point joins the first cluster that reaches it.
pub fn dbscan_fit(x: &FeatureMatrix, config: &DbscanConfig) -> Result<ClusterAssignment, ClusterError> {
    if x.nrows() == 0 {
        return Err(ClusterError::EmptyMatrix);
    }
    if !(config.eps > 0.0) {
        return Err(ClusterError::InvalidParam("eps", "must be positive".into()));
    }
    if config.min_pts == 0 {
        return Err(ClusterError::InvalidParam("min_pts", "must be at least 1".into()));
    }
    let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i)).collect();
    let eps2 = config.eps * config.eps;
    let neighbors: Vec<Vec<usize>> = rows
        .iter()
        .map(|p| (0..rows.len()).filter(|&j| squared_distance(p, &rows[j]) <= eps2).collect())
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= config.min_pts).collect();

    let mut labels = vec![NOISE; rows.len()];
    let mut next = 0i64;
    for start in 0..rows.len() {
        if !core[start] || labels[start] != NOISE {
            continue;
        }
        labels[start] = next;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if labels[q] == NOISE {
                    labels[q] = next;
                    if core[q] {
                        queue.push_back(q);
                    }
                }
            }
        }
        next += 1;
    }
    Ok(ClusterAssignment {
        row_ids: x.row_ids.clone(),
        labels,
        centroids: None,
        inertia: None,
        inertia_trace: Vec::new(),
        core_points: Some(core),
    })
}
