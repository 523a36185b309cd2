use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{0} predictions for {1} labels")]
    LengthMismatch(usize, usize),
    #[error("AUROC needs both classes present")]
    SingleClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auroc: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        MetricsReport {
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            auroc: None,
        }
    }

    /// `(name, value)` rows in a fixed order.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        let mut rows = vec![
            ("tp", self.tp.to_string()),
            ("fp", self.fp.to_string()),
            ("fn", self.fn_.to_string()),
            ("tn", self.tn.to_string()),
            ("precision", self.precision.to_string()),
            ("recall", self.recall.to_string()),
            ("f1", self.f1.to_string()),
        ];
        if let Some(a) = self.auroc {
            rows.push(("auroc", a.to_string()));
        }
        rows
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["metric", "value"])?;
        for (k, v) in self.rows() {
            w.write_record([k, v.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn confusion_and_f1(flags: &[bool], labels: &[bool]) -> Result<MetricsReport, MetricsError> {
    if flags.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(flags.len(), labels.len()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&f, &l) in flags.iter().zip(labels) {
        match (f, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn))
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, from the Mann-Whitney rank sum.
pub fn auroc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricsError> {
    if scores.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share their average
        let avg = (i + j + 2) as f64 / 2.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}

/// The threshold with the best F1 when flagging `score > threshold`, trying
/// every distinct score and one below the minimum. Ties keep the higher
/// threshold. `None` when labels lack positives or the input is empty.
pub fn best_f1_threshold(scores: &[f64], labels: &[bool]) -> Option<(f64, MetricsReport)> {
    if scores.is_empty() || scores.len() != labels.len() || !labels.iter().any(|&l| l) {
        return None;
    }
    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    candidates.insert(0, candidates[0] - 1.0);
    let mut best: Option<(f64, MetricsReport)> = None;
    for t in candidates {
        let flags: Vec<bool> = scores.iter().map(|&s| s > t).collect();
        let m = confusion_and_f1(&flags, labels).expect("lengths checked");
        if best.as_ref().map_or(true, |(_, b)| m.f1 >= b.f1) {
            best = Some((t, m));
        }
    }
    best
}

/// Share of items whose group's majority truth class is their own class.
/// Majority ties go to the smallest class.
pub fn grouping_accuracy<G: Eq + Hash + Copy, T: Eq + Hash + Ord + Copy>(groups: &[G], truth: &[T]) -> f64 {
    if groups.is_empty() {
        return 1.0;
    }
    let mut votes: HashMap<G, HashMap<T, usize>> = HashMap::new();
    for (&g, &t) in groups.iter().zip(truth) {
        *votes.entry(g).or_default().entry(t).or_default() += 1;
    }
    let majority: HashMap<G, T> = votes
        .into_iter()
        .map(|(g, v)| {
            let best = v
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("non-empty group")
                .0;
            (g, best)
        })
        .collect();
    let ok = groups.iter().zip(truth).filter(|(g, t)| majority[*g] == **t).count();
    ok as f64 / groups.len() as f64
}
