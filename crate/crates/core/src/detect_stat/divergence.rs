use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnomalyResult, DetectError};
use crate::represent::FeatureMatrix;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DivergenceKind {
    Kl,
    #[default]
    Js,
}

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("distributions have {0} and {1} outcomes")]
    SupportMismatch(usize, usize),
    #[error("KL is infinite: outcome {0} has p > 0 and q = 0")]
    InfiniteKL(usize),
    #[error("not a distribution: {0}")]
    NotDistribution(String),
}

fn check(p: &[f64]) -> Result<(), DivergenceError> {
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(DivergenceError::NotDistribution("negative or non-finite mass".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(DivergenceError::NotDistribution(format!("sums to {sum}")));
    }
    Ok(())
}

fn kl(p: &[f64], q: &[f64]) -> Result<f64, DivergenceError> {
    let mut total = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(DivergenceError::InfiniteKL(i));
        }
        total += a * (a / b).ln();
    }
    // rounding can push identical inputs a hair below zero
    Ok(total.max(0.0))
}

/// KL(P‖Q), or the Jensen-Shannon divergence which lies in [0, ln 2].
pub fn divergence(p: &[f64], q: &[f64], kind: DivergenceKind) -> Result<f64, DivergenceError> {
    if p.len() != q.len() {
        return Err(DivergenceError::SupportMismatch(p.len(), q.len()));
    }
    check(p)?;
    check(q)?;
    match kind {
        DivergenceKind::Kl => kl(p, q),
        DivergenceKind::Js => {
            let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
            Ok(0.5 * kl(p, &m)? + 0.5 * kl(q, &m)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivergenceConfig {
    #[serde(default)]
    pub kind: DivergenceKind,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.1
}

impl Default for DivergenceConfig {
    fn default() -> Self {
        DivergenceConfig {
            kind: DivergenceKind::Js,
            threshold: default_threshold(),
        }
    }
}

fn normalized(row: &[f64]) -> Option<Vec<f64>> {
    let sum: f64 = row.iter().sum();
    (sum > 0.0).then(|| row.iter().map(|v| v / sum).collect())
}

/// Scores each test row by the divergence of its normalized counts from the
/// pooled reference distribution. All-zero rows score 0. With KL, a row
/// putting mass where the reference has none is an error.
pub fn divergence_detect(
    reference: &FeatureMatrix,
    test: &FeatureMatrix,
    config: &DivergenceConfig,
) -> Result<AnomalyResult, DetectError> {
    if reference.ncols() != test.ncols() {
        return Err(DetectError::WidthMismatch(reference.ncols(), test.ncols()));
    }
    let pooled: Vec<f64> = reference.values.sum_axis(ndarray::Axis(0)).to_vec();
    let Some(q) = normalized(&pooled) else {
        return Err(DetectError::TooFewRows { needed: 1, got: 0 });
    };
    let mut scores = Vec::with_capacity(test.nrows());
    for i in 0..test.nrows() {
        scores.push(match normalized(&test.row(i)) {
            Some(p) => divergence(&p, &q, config.kind)?,
            None => 0.0,
        });
    }
    let method = match config.kind {
        DivergenceKind::Kl => "divergence_kl",
        DivergenceKind::Js => "divergence_js",
    };
    Ok(AnomalyResult::from_scores(test.row_ids.clone(), scores, config.threshold, method))
}
