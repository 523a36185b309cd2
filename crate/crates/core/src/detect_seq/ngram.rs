use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{NextEventPredictor, SeqError};
use crate::represent::EventSequenceSet;

/// Counts of next events keyed by context, for contexts of length 0..=order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextEventModel {
    pub order: usize,
    pub vocabulary_size: usize,
    pub backoff: bool,
    pub counts: BTreeMap<Vec<u32>, BTreeMap<u32, u64>>,
}

/// Counts every transition `s[..i] -> s[i]` for `i >= 1` under each context
/// suffix of length up to `order`, the empty context included. A sequence of
/// one event only feeds the empty context.
pub fn ngram_fit(train: &EventSequenceSet, order: usize, backoff: bool) -> Result<NextEventModel, SeqError> {
    if order == 0 {
        return Err(SeqError::ZeroOrder);
    }
    let mut counts: BTreeMap<Vec<u32>, BTreeMap<u32, u64>> = BTreeMap::new();
    for seq in &train.sequences {
        if seq.len() == 1 {
            *counts.entry(Vec::new()).or_default().entry(seq[0]).or_default() += 1;
        }
        for i in 1..seq.len() {
            for j in 0..=order.min(i) {
                *counts.entry(seq[i - j..i].to_vec()).or_default().entry(seq[i]).or_default() += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(SeqError::EmptyTraining);
    }
    Ok(NextEventModel {
        order,
        vocabulary_size: train.vocabulary_size,
        backoff,
        counts,
    })
}

fn ranked(table: &BTreeMap<u32, u64>) -> Vec<u32> {
    let mut ids: Vec<(u32, u64)> = table.iter().map(|(&id, &c)| (id, c)).collect();
    ids.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ids.into_iter().map(|(id, _)| id).collect()
}

impl NextEventModel {
    /// Text form: a header line, then `context_ids>next_id:count` per count.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# order={} vocabulary_size={} backoff={}\n",
            self.order, self.vocabulary_size, self.backoff
        );
        for (ctx, table) in &self.counts {
            let ctx = ctx.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            for (next, count) in table {
                let _ = writeln!(out, "{ctx}>{next}:{count}");
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SeqError> {
        let mut lines = text.lines().enumerate();
        let bad = |n: usize, m: &str| SeqError::BadModelLine(n + 1, m.to_string());
        let (_, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
        let mut order = None;
        let mut vocabulary_size = None;
        let mut backoff = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("order", v)) => order = v.parse().ok(),
                Some(("vocabulary_size", v)) => vocabulary_size = v.parse().ok(),
                Some(("backoff", v)) => backoff = v.parse().ok(),
                _ => return Err(bad(0, "unknown header field")),
            }
        }
        let (Some(order), Some(vocabulary_size), Some(backoff)) = (order, vocabulary_size, backoff) else {
            return Err(bad(0, "incomplete header"));
        };
        let mut counts: BTreeMap<Vec<u32>, BTreeMap<u32, u64>> = BTreeMap::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let (ctx, rest) = line.split_once('>').ok_or_else(|| bad(n, "missing `>`"))?;
            let (next, count) = rest.split_once(':').ok_or_else(|| bad(n, "missing `:`"))?;
            let ctx = ctx
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<Vec<u32>, _>>()
                .map_err(|_| bad(n, "bad context id"))?;
            if ctx.len() > order {
                return Err(bad(n, "context longer than order"));
            }
            let next: u32 = next.parse().map_err(|_| bad(n, "bad next id"))?;
            let count: u64 = count.parse().map_err(|_| bad(n, "bad count"))?;
            if count == 0 {
                return Err(bad(n, "zero count"));
            }
            counts.entry(ctx).or_default().insert(next, count);
        }
        Ok(NextEventModel {
            order,
            vocabulary_size,
            backoff,
            counts,
        })
    }
}

impl NextEventPredictor for NextEventModel {
    fn order(&self) -> usize {
        self.order
    }

    /// Ranks by count under the longest stored suffix of `context` (at most
    /// `order` long), ties by ascending id. With backoff, shorter suffixes
    /// down to the unigram table fill the ranking with ids not yet listed;
    /// without it only the exact suffix is consulted.
    fn predict_topk(&self, context: &[u32], k: usize) -> Result<Vec<u32>, SeqError> {
        if k == 0 {
            return Err(SeqError::ZeroK);
        }
        if !self.counts.contains_key(&[][..]) {
            return Err(SeqError::UnknownAllContexts);
        }
        let longest = context.len().min(self.order);
        let tail = &context[context.len() - longest..];
        if !self.backoff {
            let mut out = self.counts.get(tail).map(ranked).unwrap_or_default();
            out.truncate(k);
            return Ok(out);
        }
        let mut out: Vec<u32> = Vec::new();
        for j in (0..=longest).rev() {
            if let Some(table) = self.counts.get(&tail[longest - j..]) {
                for id in ranked(table) {
                    if !out.contains(&id) {
                        out.push(id);
                    }
                }
            }
            if out.len() >= k {
                break;
            }
        }
        out.truncate(k);
        Ok(out)
    }
}
