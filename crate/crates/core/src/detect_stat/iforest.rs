use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AnomalyResult, DetectError};
use crate::represent::FeatureMatrix;

const EULER_GAMMA: f64 = 0.577_215_664_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IForestConfig {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_trees() -> usize {
    100
}
fn default_subsample() -> usize {
    256
}
fn default_threshold() -> f64 {
    0.5
}

impl Default for IForestConfig {
    fn default() -> Self {
        IForestConfig {
            n_trees: default_trees(),
            subsample: default_subsample(),
            seed: 0,
            threshold: default_threshold(),
        }
    }
}

/// Average path length of an unsuccessful search in a binary search tree of
/// `m` nodes.
pub fn average_path_length(m: usize) -> f64 {
    match m {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let m = m as f64;
            2.0 * ((m - 1.0).ln() + EULER_GAMMA) - 2.0 * (m - 1.0) / m
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { size: usize },
    Split { attr: usize, value: f64, left: Box<Node>, right: Box<Node> },
}

fn grow(rows: &[&[f64]], depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> Node {
    if rows.len() <= 1 || depth >= limit {
        return Node::Leaf { size: rows.len() };
    }
    let dims = rows[0].len();
    let ranges: Vec<(usize, f64, f64)> = (0..dims)
        .filter_map(|a| {
            let lo = rows.iter().map(|r| r[a]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[a]).fold(f64::NEG_INFINITY, f64::max);
            (hi > lo).then_some((a, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: rows.len() };
    }
    let (attr, lo, hi) = ranges[rng.gen_range(0..ranges.len())];
    let value = rng.gen_range(lo..hi);
    let (l, r): (Vec<&[f64]>, Vec<&[f64]>) = rows.iter().partition(|row| row[attr] < value);
    Node::Split {
        attr,
        value,
        left: Box::new(grow(&l, depth + 1, limit, rng)),
        right: Box::new(grow(&r, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64], depth: usize) -> f64 {
    match node {
        Node::Leaf { size } => depth as f64 + average_path_length(*size),
        Node::Split { attr, value, left, right } => {
            if x[*attr] < *value {
                path_length(left, x, depth + 1)
            } else {
                path_length(right, x, depth + 1)
            }
        }
    }
}

/// A fitted forest; scoring is read-only and thread-safe.
#[derive(Debug, Clone)]
pub struct IsolationForest {
    trees: Vec<Node>,
    sample_size: usize,
    dims: usize,
}

impl IsolationForest {
    pub fn fit(x: &FeatureMatrix, config: &IForestConfig) -> Result<Self, DetectError> {
        if config.subsample < 2 {
            return Err(DetectError::InvalidParam("subsample", "must be at least 2".into()));
        }
        if config.n_trees == 0 {
            return Err(DetectError::InvalidParam("n_trees", "must be positive".into()));
        }
        if x.nrows() < 2 {
            return Err(DetectError::TooFewRows {
                needed: 2,
                got: x.nrows(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i)).collect();
        let sample_size = config.subsample.min(rows.len());
        let limit = (sample_size as f64).log2().ceil() as usize;
        let mut seeder = ChaCha8Rng::seed_from_u64(config.seed);
        let seeds: Vec<u64> = (0..config.n_trees).map(|_| seeder.gen()).collect();
        let trees = seeds
            .par_iter()
            .map(|&s| {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let mut picked = sample(&mut rng, rows.len(), sample_size).into_vec();
                picked.sort_unstable();
                let subset: Vec<&[f64]> = picked.iter().map(|&i| rows[i].as_slice()).collect();
                grow(&subset, 0, limit, &mut rng)
            })
            .collect();
        Ok(IsolationForest {
            trees,
            sample_size,
            dims: x.ncols(),
        })
    }

    /// `2^(-E[h(x)] / c(sample_size))` per row, in (0, 1).
    pub fn score(&self, x: &FeatureMatrix) -> Result<Vec<f64>, DetectError> {
        if x.ncols() != self.dims {
            return Err(DetectError::WidthMismatch(self.dims, x.ncols()));
        }
        let c = average_path_length(self.sample_size);
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mean = self.trees.iter().map(|t| path_length(t, &row, 0)).sum::<f64>() / self.trees.len() as f64;
                2f64.powf(-mean / c)
            })
            .collect())
    }
}

pub fn iforest_fit_score(x: &FeatureMatrix, config: &IForestConfig) -> Result<AnomalyResult, DetectError> {
    let forest = IsolationForest::fit(x, config)?;
    Ok(AnomalyResult::from_scores(
        x.row_ids.clone(),
        forest.score(x)?,
        config.threshold,
        "isolation_forest",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_length_constants() {
        assert_eq!(average_path_length(2), 1.0);
        let c256 = average_path_length(256);
        assert!((c256 - (2.0 * (255f64.ln() + EULER_GAMMA) - 2.0 * 255.0 / 256.0)).abs() < 1e-12);
        // E[h] = c(m) is the 0.5 fixed point
        assert_eq!(2f64.powf(-c256 / c256), 0.5);
    }

    #[test]
    fn identical_rows_score_equally() {
        let x = FeatureMatrix::from_rows(&vec![vec![1.0, 2.0]; 20]);
        let r = iforest_fit_score(&x, &IForestConfig::default()).unwrap();
        assert!(r.scores.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn planted_outlier_ranks_first() {
        let mut rows: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 10) as f64 * 0.1, (i / 10) as f64 * 0.1]).collect();
        rows.push(vec![10.0, 10.0]);
        let r = iforest_fit_score(&FeatureMatrix::from_rows(&rows), &IForestConfig::default()).unwrap();
        let out = r.scores[100];
        assert!(r.scores[..100].iter().all(|&s| s < out));
        assert!(r.scores.iter().all(|&s| s > 0.0 && s < 1.0));
        assert!(r.flags[100]);
    }

    #[test]
    fn seeded() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 13) as f64]).collect();
        let x = FeatureMatrix::from_rows(&rows);
        let a = iforest_fit_score(&x, &IForestConfig::default()).unwrap();
        let b = iforest_fit_score(&x, &IForestConfig::default()).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            IsolationForest::fit(&FeatureMatrix::from_rows(&[vec![1.0]]), &IForestConfig::default()),
            Err(DetectError::TooFewRows { .. })
        ));
    }
}
