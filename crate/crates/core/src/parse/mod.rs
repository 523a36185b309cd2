//! Template mining: Drain, IPLoM and AEL behind one [`parse`] entry point.
//!
//! Every algorithm groups by token count first, so lines are sharded by token
//! count and the shards are mined independently (in parallel when a thread
//! pool is available). Template ids are then assigned in order of each group's
//! first line, which keeps the result identical for any thread count.

mod ael;
mod drain;
mod iplom;
mod result;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::log_model::LogRecordBatch;

pub use ael::is_dynamic;
pub use result::{
    read_parsed_lines_csv, read_templates_csv, template_catalog, CatalogEntry, ParseResult, ParseResultError, Template,
    EMPTY_TEMPLATE_ID,
};

/// The wildcard token standing for a parameter.
pub const WILDCARD: &str = "<*>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ParserAlgorithm {
    #[default]
    Drain,
    Iplom,
    Ael,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrainConfig {
    pub depth: usize,
    pub sim_threshold: f64,
    pub max_children: usize,
}

impl Default for DrainConfig {
    fn default() -> Self {
        DrainConfig {
            depth: 4,
            sim_threshold: 0.4,
            max_children: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IplomConfig {
    pub ct: f64,
    pub lower_bound: f64,
}

impl Default for IplomConfig {
    fn default() -> Self {
        IplomConfig {
            ct: 0.35,
            lower_bound: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AelConfig {
    pub min_event_count: usize,
    pub merge_percent: f64,
}

impl Default for AelConfig {
    fn default() -> Self {
        AelConfig {
            min_event_count: 2,
            merge_percent: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ParserConfig {
    pub algorithm: ParserAlgorithm,
    /// Treat tokens containing digits as parameters before mining.
    pub mask_digits: bool,
    pub drain: DrainConfig,
    pub iplom: IplomConfig,
    pub ael: AelConfig,
}

impl ParserConfig {
    pub fn with_algorithm(algorithm: ParserAlgorithm) -> Self {
        ParserConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let frac = |v: f64| v > 0.0 && v < 1.0;
        if self.drain.depth < 3 {
            out.push(("parser.drain.depth", "must be at least 3".to_string()));
        }
        // 1.0 is allowed: only identical lines merge
        if !(self.drain.sim_threshold > 0.0 && self.drain.sim_threshold <= 1.0) {
            out.push(("parser.drain.sim_threshold", "must lie in (0, 1]".to_string()));
        }
        if self.drain.max_children < 2 {
            out.push(("parser.drain.max_children", "must be at least 2".to_string()));
        }
        if !frac(self.iplom.ct) {
            out.push(("parser.iplom.ct", "must lie in (0, 1)".to_string()));
        }
        if !frac(self.iplom.lower_bound) {
            out.push(("parser.iplom.lower_bound", "must lie in (0, 1)".to_string()));
        }
        if !frac(self.ael.merge_percent) {
            out.push(("parser.ael.merge_percent", "must lie in (0, 1)".to_string()));
        }
        if self.ael.min_event_count == 0 {
            out.push(("parser.ael.min_event_count", "must be positive".to_string()));
        }
        out
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ParseError {
    #[error("invalid parser config: {0}: {1}")]
    InvalidConfig(&'static str, String),
    #[error("building thread pool: {0}")]
    ThreadPool(String),
}

/// Groups found in one token-count shard. `assignment[i]` is the group of the
/// shard's i-th line; groups are numbered by first appearance.
pub(crate) struct ShardGroups {
    pub assignment: Vec<usize>,
    pub templates: Vec<Vec<String>>,
}

pub(crate) trait ShardParser: Sync {
    /// `lines` all have the same token count.
    fn group(&self, lines: &[Vec<&str>]) -> ShardGroups;
}

fn shard_parser(config: &ParserConfig) -> Box<dyn ShardParser> {
    match config.algorithm {
        ParserAlgorithm::Drain => Box::new(drain::DrainShard {
            params: drain::DrainParams {
                depth: config.drain.depth,
                sim_threshold: config.drain.sim_threshold,
                max_children: config.drain.max_children,
            },
        }),
        ParserAlgorithm::Iplom => Box::new(iplom::IplomShard {
            params: iplom::IplomParams {
                ct: config.iplom.ct,
                lower_bound: config.iplom.lower_bound,
            },
        }),
        ParserAlgorithm::Ael => Box::new(ael::AelShard {
            params: ael::AelParams {
                min_event_count: config.ael.min_event_count,
                merge_percent: config.ael.merge_percent,
            },
        }),
    }
}

/// Whitespace tokenization used by every parser.
pub fn tokenize(body: &str) -> Vec<&str> {
    body.split_whitespace().collect()
}

/// Parses the bodies of `batch` on the current rayon pool.
pub fn parse(batch: &LogRecordBatch, config: &ParserConfig) -> Result<ParseResult, ParseError> {
    parse_bodies(batch.bodies(), config)
}

/// Parses on a dedicated pool of `threads` workers.
pub fn parse_with_threads(batch: &LogRecordBatch, config: &ParserConfig, threads: usize) -> Result<ParseResult, ParseError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| ParseError::ThreadPool(e.to_string()))?;
    pool.install(|| parse(batch, config))
}

pub fn parse_bodies<S: AsRef<str> + Sync>(bodies: &[S], config: &ParserConfig) -> Result<ParseResult, ParseError> {
    if let Some((field, message)) = config.problems().into_iter().next() {
        return Err(ParseError::InvalidConfig(field, message));
    }
    let tokens: Vec<Vec<&str>> = bodies.iter().map(|b| tokenize(b.as_ref())).collect();
    let masked: Vec<Vec<&str>> = if config.mask_digits {
        tokens
            .iter()
            .map(|t| {
                t.iter()
                    .map(|tok| if tok.bytes().any(|b| b.is_ascii_digit()) { WILDCARD } else { *tok })
                    .collect()
            })
            .collect()
    } else {
        tokens.clone()
    };

    let mut shards: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in tokens.iter().enumerate() {
        if !t.is_empty() {
            shards.entry(t.len()).or_default().push(i);
        }
    }
    let parser = shard_parser(config);
    let shards: Vec<Vec<usize>> = shards.into_values().collect();

    // (first line index, member line indices, algorithm template)
    let mut groups: Vec<(usize, Vec<usize>, Vec<String>)> = shards
        .par_iter()
        .flat_map_iter(|members| {
            let lines: Vec<Vec<&str>> = members.iter().map(|&i| masked[i].clone()).collect();
            let found = parser.group(&lines);
            let mut by_group: Vec<Vec<usize>> = vec![Vec::new(); found.templates.len()];
            for (local, &g) in found.assignment.iter().enumerate() {
                by_group[g].push(members[local]);
            }
            by_group
                .into_iter()
                .zip(found.templates)
                .filter(|(m, _)| !m.is_empty())
                .map(|(m, t)| (m[0], m, t))
                .collect::<Vec<_>>()
        })
        .collect();
    groups.sort_by_key(|g| g.0);

    let mut result = ParseResult::empty(bodies.len());
    for (_, members, algo_template) in groups {
        // a position stays constant only if the algorithm kept it and every member agrees
        let template: Vec<String> = algo_template
            .iter()
            .enumerate()
            .map(|(pos, tok)| {
                if tok != WILDCARD && members.iter().all(|&m| tokens[m][pos] == tok) {
                    tok.clone()
                } else {
                    WILDCARD.to_string()
                }
            })
            .collect();
        let id = result.push_template(template);
        for &m in &members {
            result.assign(m, id, &tokens[m]);
        }
    }
    result.count_empty();
    Ok(result)
}
