use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NextEventPredictor, SeqError};
use crate::detect_stat::AnomalyResult;
use crate::represent::EventSequenceSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FlagLevel {
    Event,
    #[default]
    Partition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopKConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Context length; defaults to the model order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default)]
    pub flag_level: FlagLevel,
}

fn default_k() -> usize {
    10
}

impl Default for TopKConfig {
    fn default() -> Self {
        TopKConfig {
            k: default_k(),
            window: None,
            flag_level: FlagLevel::Partition,
        }
    }
}

impl TopKConfig {
    pub fn with_k(k: usize) -> Self {
        TopKConfig {
            k,
            ..Default::default()
        }
    }
}

/// Per-position verdicts for one sequence. Positions from 1 on are checked
/// against their preceding window; a lone event is checked against the
/// unigram ranking.
pub fn anomalous_positions<P: NextEventPredictor + ?Sized>(
    model: &P,
    seq: &[u32],
    config: &TopKConfig,
) -> Result<Vec<bool>, SeqError> {
    let window = config.window.unwrap_or_else(|| model.order());
    if seq.len() == 1 {
        return Ok(vec![!model.predict_topk(&[], config.k)?.contains(&seq[0])]);
    }
    (1..seq.len())
        .map(|i| {
            let ctx = &seq[i.saturating_sub(window)..i];
            Ok(!model.predict_topk(ctx, config.k)?.contains(&seq[i]))
        })
        .collect()
}

/// Partition level: score is the fraction of anomalous positions and a
/// sequence is flagged when any position is. Event level: one row per checked
/// position (`<partition>:<index>`) scoring 1 when anomalous.
pub fn detect_sequence<P: NextEventPredictor + ?Sized>(
    model: &P,
    test: &EventSequenceSet,
    config: &TopKConfig,
) -> Result<AnomalyResult, SeqError> {
    if config.k == 0 {
        return Err(SeqError::ZeroK);
    }
    let verdicts: Vec<Vec<bool>> = test
        .sequences
        .par_iter()
        .map(|s| anomalous_positions(model, s, config))
        .collect::<Result<_, _>>()?;
    Ok(match config.flag_level {
        FlagLevel::Partition => {
            let scores = verdicts
                .iter()
                .map(|v| {
                    if v.is_empty() {
                        0.0
                    } else {
                        v.iter().filter(|&&a| a).count() as f64 / v.len() as f64
                    }
                })
                .collect();
            AnomalyResult::from_scores(test.partition_ids.clone(), scores, 0.0, "ngram_topk")
        }
        FlagLevel::Event => {
            let mut ids = Vec::new();
            let mut scores = Vec::new();
            for ((pid, seq), v) in test.partition_ids.iter().zip(&test.sequences).zip(&verdicts) {
                let first = if seq.len() == 1 { 0 } else { 1 };
                for (j, &a) in v.iter().enumerate() {
                    ids.push(format!("{pid}:{}", first + j));
                    scores.push(if a { 1.0 } else { 0.0 });
                }
            }
            AnomalyResult::from_scores(ids, scores, 0.5, "ngram_topk")
        }
    })
}
