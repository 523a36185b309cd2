//! AEL: anonymize dynamic-looking tokens, group identical anonymized lines
//! within a word-count bin, then reconcile groups that differ only where one
//! side was anonymized.

use indexmap::IndexMap;

use super::{ShardGroups, ShardParser, WILDCARD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AelParams {
    /// Bins with fewer distinct anonymized events are not reconciled.
    pub min_event_count: usize,
    pub merge_percent: f64,
}

/// Numbers, hex literals, ip-like tokens and identifiers carrying digits.
pub fn is_dynamic(token: &str) -> bool {
    if token == WILDCARD {
        return true;
    }
    let lower = token.to_ascii_lowercase();
    if let Some(hex) = lower.strip_prefix("0x") {
        if !hex.is_empty() && hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return true;
        }
    }
    token.bytes().any(|b| b.is_ascii_digit())
}

pub(crate) struct AelShard {
    pub params: AelParams,
}

impl AelShard {
    /// Fraction of equal positions, or `None` when some differing position
    /// holds constants on both sides.
    fn mergeable(a: &[String], b: &[String]) -> Option<f64> {
        let mut same = 0usize;
        for (x, y) in a.iter().zip(b) {
            if x == y {
                same += 1;
            } else if x != WILDCARD && y != WILDCARD {
                return None;
            }
        }
        Some(if a.is_empty() { 1.0 } else { same as f64 / a.len() as f64 })
    }
}

impl ShardParser for AelShard {
    fn group(&self, lines: &[Vec<&str>]) -> ShardGroups {
        // identical anonymized lines form one event
        let mut events: IndexMap<Vec<String>, Vec<usize>> = IndexMap::new();
        for (i, tokens) in lines.iter().enumerate() {
            let anon: Vec<String> = tokens
                .iter()
                .map(|t| if is_dynamic(t) { WILDCARD.to_string() } else { t.to_string() })
                .collect();
            events.entry(anon).or_default().push(i);
        }

        let mut templates: Vec<Vec<String>> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        let reconcile = events.len() >= self.params.min_event_count.max(2);
        for (anon, idx) in events {
            let target = if reconcile {
                templates
                    .iter()
                    .position(|t| Self::mergeable(t, &anon).is_some_and(|s| s >= self.params.merge_percent))
            } else {
                None
            };
            match target {
                Some(g) => {
                    for (t, a) in templates[g].iter_mut().zip(&anon) {
                        if t != a {
                            *t = WILDCARD.to_string();
                        }
                    }
                    members[g].extend(idx);
                }
                None => {
                    templates.push(anon);
                    members.push(idx);
                }
            }
        }

        let mut assignment = vec![0; lines.len()];
        for (g, m) in members.iter().enumerate() {
            for &i in m {
                assignment[i] = g;
            }
        }
        ShardGroups {
            assignment,
            templates,
        }
    }
}
