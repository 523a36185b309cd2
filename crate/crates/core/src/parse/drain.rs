//! Drain: a fixed-depth prefix tree over leading tokens whose leaves hold
//! candidate groups; a line joins the most similar group at its leaf or
//! starts a new one.

use std::collections::HashMap;

use super::{ShardGroups, ShardParser, WILDCARD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrainParams {
    pub depth: usize,
    pub sim_threshold: f64,
    pub max_children: usize,
}

#[derive(Default, Debug)]
struct Node {
    children: HashMap<String, Node>,
    groups: Vec<usize>,
}

fn has_digit(token: &str) -> bool {
    token.bytes().any(|b| b.is_ascii_digit())
}

pub(crate) struct DrainShard {
    pub params: DrainParams,
}

impl DrainShard {
    /// Token layers walked below the token-count node. The depth counts the
    /// root, the token-count node and the leaf group lists; the last token of a
    /// line is never used for routing.
    fn descent(&self, len: usize) -> usize {
        self.params.depth.saturating_sub(3).min(len.saturating_sub(1))
    }
}

/// Equal tokens at equal positions over the template length, plus the
/// template's wildcard count for tie-breaking. A template wildcard only counts
/// as equal when the line token is itself a masked wildcard.
fn similarity(template: &[String], tokens: &[&str]) -> (f64, usize) {
    if template.is_empty() {
        return (1.0, 0);
    }
    let mut same = 0usize;
    let mut params = 0usize;
    for (t, tok) in template.iter().zip(tokens) {
        if t == tok {
            same += 1;
        } else if t == WILDCARD {
            params += 1;
        }
    }
    (same as f64 / template.len() as f64, params)
}

impl ShardParser for DrainShard {
    fn group(&self, lines: &[Vec<&str>]) -> ShardGroups {
        let mut root = Node::default();
        let mut templates: Vec<Vec<String>> = Vec::new();
        let mut assignment = Vec::with_capacity(lines.len());

        for tokens in lines {
            let descent = self.descent(tokens.len());
            let matched = {
                let mut node = Some(&root);
                for tok in tokens.iter().take(descent) {
                    let Some(cur) = node else { break };
                    node = cur.children.get(*tok).or_else(|| cur.children.get(WILDCARD));
                }
                node.and_then(|leaf| {
                    let mut best: Option<(usize, f64, usize)> = None;
                    for &g in &leaf.groups {
                        let (sim, params) = similarity(&templates[g], tokens);
                        let better = match best {
                            None => true,
                            Some((_, bs, bp)) => sim > bs || (sim == bs && params > bp),
                        };
                        if better {
                            best = Some((g, sim, params));
                        }
                    }
                    best.filter(|&(_, sim, _)| sim >= self.params.sim_threshold)
                        .map(|(g, _, _)| g)
                })
            };

            match matched {
                Some(g) => {
                    for (t, tok) in templates[g].iter_mut().zip(tokens) {
                        if t != tok {
                            *t = WILDCARD.to_string();
                        }
                    }
                    assignment.push(g);
                }
                None => {
                    let g = templates.len();
                    templates.push(tokens.iter().map(|t| t.to_string()).collect());
                    self.insert(&mut root, tokens, g, descent);
                    assignment.push(g);
                }
            }
        }
        ShardGroups {
            assignment,
            templates,
        }
    }
}

impl DrainShard {
    fn insert(&self, root: &mut Node, tokens: &[&str], group: usize, descent: usize) {
        let max_children = self.params.max_children;
        let mut node = root;
        for tok in tokens.iter().take(descent) {
            let key = if node.children.contains_key(*tok) {
                tok.to_string()
            } else if has_digit(tok) {
                WILDCARD.to_string()
            } else if node.children.contains_key(WILDCARD) {
                if node.children.len() < max_children {
                    tok.to_string()
                } else {
                    WILDCARD.to_string()
                }
            } else if node.children.len() + 1 < max_children {
                tok.to_string()
            } else {
                WILDCARD.to_string()
            };
            node = node.children.entry(key).or_default();
        }
        node.groups.push(group);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(lines: &[&str], sim: f64) -> ShardGroups {
        let toks: Vec<Vec<&str>> = lines.iter().map(|l| l.split_whitespace().collect()).collect();
        DrainShard {
            params: DrainParams {
                depth: 4,
                sim_threshold: sim,
                max_children: 100,
            },
        }
        .group(&toks)
    }

    #[test]
    fn merges_similar_lines() {
        let g = run(&["connected to 10.0.0.1", "connected to 10.0.0.2"], 0.4);
        assert_eq!(g.assignment, vec![0, 0]);
        assert_eq!(g.templates[0], vec!["connected", "to", "<*>"]);
    }

    #[test]
    fn leading_parameter_routes_through_wildcard() {
        let g = run(&["17 bytes sent ok", "23 bytes sent ok", "hello bytes sent ok"], 0.4);
        assert_eq!(g.assignment[0], g.assignment[1]);
    }

    #[test]
    fn low_similarity_splits() {
        let g = run(&["a b c d", "a x y z"], 0.4);
        assert_eq!(g.assignment, vec![0, 1]);
    }

    #[test]
    fn full_threshold_keeps_distinct_lines_apart() {
        let g = run(&["a b c", "a b d", "a b c"], 1.0);
        assert_eq!(g.assignment, vec![0, 1, 0]);
    }

    #[test]
    fn max_children_overflow_goes_to_wildcard() {
        let lines: Vec<String> = (0..10).map(|i| format!("w{} tail", ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"][i])).collect();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        let toks: Vec<Vec<&str>> = refs.iter().map(|l| l.split_whitespace().collect()).collect();
        let g = DrainShard {
            params: DrainParams {
                depth: 4,
                sim_threshold: 0.5,
                max_children: 3,
            },
        }
        .group(&toks);
        // the overflow children share one leaf and merge on the constant tail
        let tail_group = g.assignment[9];
        assert!(g.assignment.iter().filter(|&&a| a == tail_group).count() > 1);
    }
}
