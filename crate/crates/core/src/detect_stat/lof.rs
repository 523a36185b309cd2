use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnomalyResult, DetectError};
use crate::represent::FeatureMatrix;

/// Keeps densities finite when neighbours coincide.
const REACH_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LofConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_k() -> usize {
    10
}
fn default_threshold() -> f64 {
    1.5
}

impl Default for LofConfig {
    fn default() -> Self {
        LofConfig {
            k: default_k(),
            threshold: default_threshold(),
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// The k-distance of a query and its neighbourhood (every reference point
/// within it, so ties can make it larger than k). `skip` excludes the query
/// itself when it is one of the reference points.
fn neighbourhood(query: &[f64], reference: &[Vec<f64>], k: usize, skip: Option<usize>) -> (f64, Vec<(usize, f64)>) {
    let mut d: Vec<(usize, f64)> = reference
        .iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(j, r)| (j, distance(query, r)))
        .collect();
    d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let kdist = d[k - 1].1;
    d.retain(|&(_, dist)| dist <= kdist);
    (kdist, d)
}

/// Reference points with their k-distances and local reachability densities.
#[derive(Debug, Clone)]
pub struct LocalOutlierFactor {
    rows: Vec<Vec<f64>>,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
    /// LOF of each reference point against the others.
    training_scores: Vec<f64>,
}

impl LocalOutlierFactor {
    pub fn fit(x: &FeatureMatrix, k: usize) -> Result<Self, DetectError> {
        if k == 0 {
            return Err(DetectError::InvalidParam("k", "must be positive".into()));
        }
        if x.nrows() <= k {
            return Err(DetectError::KTooLarge { k, rows: x.nrows() });
        }
        let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i)).collect();
        let hoods: Vec<(f64, Vec<(usize, f64)>)> =
            (0..rows.len()).into_par_iter().map(|i| neighbourhood(&rows[i], &rows, k, Some(i))).collect();
        let k_distance: Vec<f64> = hoods.iter().map(|h| h.0).collect();
        let lrd: Vec<f64> = hoods.iter().map(|(_, n)| density(n, &k_distance)).collect();
        let training_scores = hoods
            .iter()
            .zip(&lrd)
            .map(|((_, n), &own)| n.iter().map(|&(j, _)| lrd[j]).sum::<f64>() / n.len() as f64 / own)
            .collect();
        Ok(LocalOutlierFactor {
            rows,
            k,
            k_distance,
            lrd,
            training_scores,
        })
    }

    pub fn training_scores(&self) -> &[f64] {
        &self.training_scores
    }

    /// LOF of new points relative to the reference set.
    pub fn score(&self, x: &FeatureMatrix) -> Result<Vec<f64>, DetectError> {
        let dims = self.rows[0].len();
        if x.ncols() != dims {
            return Err(DetectError::WidthMismatch(dims, x.ncols()));
        }
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let (_, n) = neighbourhood(&x.row(i), &self.rows, self.k, None);
                let own = density(&n, &self.k_distance);
                n.iter().map(|&(j, _)| self.lrd[j]).sum::<f64>() / n.len() as f64 / own
            })
            .collect())
    }
}

/// Inverse mean reachability distance over a neighbourhood.
fn density(hood: &[(usize, f64)], k_distance: &[f64]) -> f64 {
    let mean = hood.iter().map(|&(j, d)| d.max(k_distance[j])).sum::<f64>() / hood.len() as f64;
    1.0 / mean.max(REACH_FLOOR)
}

/// LOF of every row against the other rows.
pub fn lof_score(x: &FeatureMatrix, config: &LofConfig) -> Result<AnomalyResult, DetectError> {
    let model = LocalOutlierFactor::fit(x, config.k)?;
    Ok(AnomalyResult::from_scores(
        x.row_ids.clone(),
        model.training_scores.clone(),
        config.threshold,
        "lof",
    ))
}
