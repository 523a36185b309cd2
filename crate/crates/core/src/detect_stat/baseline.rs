use serde::{Deserialize, Serialize};

use super::{AnomalyResult, DetectError};
use crate::represent::CounterSeries;

const STD_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    #[default]
    Ewma,
    EtsAdditive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_z")]
    pub z_threshold: f64,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
}

fn default_alpha() -> f64 {
    0.3
}
fn default_z() -> f64 {
    3.0
}
fn default_warmup() -> usize {
    10
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            alpha: default_alpha(),
            z_threshold: default_z(),
            warmup: default_warmup(),
        }
    }
}

impl BaselineConfig {
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(("alpha", "must lie in (0, 1)".to_string()));
        }
        if self.warmup < 2 {
            out.push(("warmup", "must be at least 2".to_string()));
        }
        if !(self.z_threshold >= 0.0) {
            out.push(("z_threshold", "must be non-negative".to_string()));
        }
        out
    }
}

/// One-step-ahead residuals; the first bucket has residual 0.
fn residuals(y: &[f64], alpha: f64, mode: BaselineMode) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    let mut level = y[0];
    let mut trend = match (mode, y.get(1)) {
        (BaselineMode::EtsAdditive, Some(&y1)) => y1 - y[0],
        _ => 0.0,
    };
    for t in 1..y.len() {
        let forecast = level + trend;
        out[t] = y[t] - forecast;
        let new_level = alpha * y[t] + (1.0 - alpha) * forecast;
        if mode == BaselineMode::EtsAdditive {
            trend = alpha * (new_level - level) + (1.0 - alpha) * trend;
        }
        level = new_level;
    }
    out
}

fn sample_std(window: &[f64]) -> f64 {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt().max(STD_FLOOR)
}

/// `|r_t| / std` of the preceding `warmup` residuals; warmup buckets score 0.
pub fn baseline_scores(y: &[f64], config: &BaselineConfig, mode: BaselineMode) -> Result<Vec<f64>, DetectError> {
    if let Some((field, message)) = config.problems().into_iter().next() {
        return Err(DetectError::InvalidParam(field, message));
    }
    if y.len() <= config.warmup {
        return Err(DetectError::SeriesTooShort {
            len: y.len(),
            warmup: config.warmup,
        });
    }
    let r = residuals(y, config.alpha, mode);
    Ok((0..y.len())
        .map(|t| {
            if t < config.warmup {
                0.0
            } else {
                r[t].abs() / sample_std(&r[t - config.warmup..t])
            }
        })
        .collect())
}

pub fn baseline_detect(series: &CounterSeries, config: &BaselineConfig, mode: BaselineMode) -> Result<AnomalyResult, DetectError> {
    let scores = baseline_scores(&series.values(), config, mode)?;
    let method = match mode {
        BaselineMode::Ewma => "ewma",
        BaselineMode::EtsAdditive => "ets_additive",
    };
    Ok(AnomalyResult::from_scores(series.bucket_labels(), scores, config.z_threshold, method))
}
