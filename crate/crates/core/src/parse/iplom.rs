//! IPLoM: iterative partitioning. Lines arrive already split by token count;
//! partitions are then split on the least-varied token position and on the
//! mapping between a pair of token positions, and each final partition yields
//! one template.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexMap;

use super::{ShardGroups, ShardParser, WILDCARD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IplomParams {
    /// Cluster goodness threshold: partitions whose share of constant
    /// positions reaches it skip the bijection split.
    pub ct: f64,
    pub lower_bound: f64,
}

pub(crate) struct IplomShard {
    pub params: IplomParams,
}

fn cardinalities(lines: &[Vec<&str>], members: &[usize], width: usize) -> Vec<usize> {
    (0..width)
        .map(|pos| {
            members
                .iter()
                .map(|&m| lines[m][pos])
                .collect::<HashSet<_>>()
                .len()
        })
        .collect()
}

/// Splits `members` by the token at `pos`, keeping first-appearance order.
fn split_by_position(lines: &[Vec<&str>], members: &[usize], pos: usize) -> Vec<Vec<usize>> {
    let mut groups: IndexMap<&str, Vec<usize>> = IndexMap::new();
    for &m in members {
        groups.entry(lines[m][pos]).or_default().push(m);
    }
    groups.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum SplitKey<'a> {
    First(&'a str),
    Second(&'a str),
    ManyToMany,
}

impl IplomShard {
    /// Step 2: split on the position with the fewest distinct tokens, unless
    /// some position is already constant.
    fn split_by_token_position(&self, lines: &[Vec<&str>], members: Vec<usize>, width: usize) -> Vec<Vec<usize>> {
        if members.len() < 2 || width == 0 {
            return vec![members];
        }
        let cards = cardinalities(lines, &members, width);
        let (pos, &min) = cards
            .iter()
            .enumerate()
            .min_by_key(|&(i, c)| (*c, i))
            .expect("width > 0");
        if min == 1 {
            return vec![members];
        }
        split_by_position(lines, &members, pos)
    }

    /// Chooses the two positions whose token mapping drives step 3.
    fn mapping_positions(&self, cards: &[usize], width: usize) -> Option<(usize, usize)> {
        if width == 2 {
            return Some((0, 1));
        }
        if width < 2 {
            return None;
        }
        let constant = cards.iter().filter(|&&c| c == 1).count();
        if constant as f64 / width as f64 >= self.params.ct {
            return None;
        }
        // most frequent cardinality among variable positions, smallest on ties
        let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
        for &c in cards.iter().filter(|&&c| c > 1) {
            *freq.entry(c).or_default() += 1;
        }
        let (&card, &count) = freq.iter().max_by_key(|&(c, f)| (*f, std::cmp::Reverse(*c)))?;
        let with_card: Vec<usize> = (0..width).filter(|&p| cards[p] == card).collect();
        if count >= 2 {
            return Some((with_card[0], with_card[1]));
        }
        let p1 = with_card[0];
        let p2 = (0..width)
            .filter(|&p| p != p1 && cards[p] > 1)
            .min_by_key(|&p| (cards[p], p))?;
        Some((p1.min(p2), p1.max(p2)))
    }

    /// Which side of a one-to-many relation to split on: 1 for the first
    /// position's token, 2 for the second.
    fn split_rank(&self, set_size: usize, lines_with_token: usize, one_to_many: bool) -> u8 {
        let distance = if lines_with_token == 0 {
            1.0
        } else {
            set_size as f64 / lines_with_token as f64
        };
        // a small many-side relative to its line count means the many-side is constant
        match (distance <= self.params.lower_bound, one_to_many) {
            (true, true) | (false, false) => 2,
            (true, false) | (false, true) => 1,
        }
    }

    /// Step 3: split on the relation between tokens at two positions.
    fn split_by_bijection(&self, lines: &[Vec<&str>], members: Vec<usize>, width: usize) -> Vec<Vec<usize>> {
        if members.len() < 2 {
            return vec![members];
        }
        let cards = cardinalities(lines, &members, width);
        let Some((p1, p2)) = self.mapping_positions(&cards, width) else {
            return vec![members];
        };
        let mut forward: HashMap<&str, HashSet<&str>> = HashMap::new();
        let mut backward: HashMap<&str, HashSet<&str>> = HashMap::new();
        let mut first_count: HashMap<&str, usize> = HashMap::new();
        let mut second_count: HashMap<&str, usize> = HashMap::new();
        for &m in &members {
            let (a, b) = (lines[m][p1], lines[m][p2]);
            forward.entry(a).or_default().insert(b);
            backward.entry(b).or_default().insert(a);
            *first_count.entry(a).or_default() += 1;
            *second_count.entry(b).or_default() += 1;
        }
        let mut groups: IndexMap<SplitKey<'_>, Vec<usize>> = IndexMap::new();
        for &m in &members {
            let (a, b) = (lines[m][p1], lines[m][p2]);
            let fan_out = forward[a].len();
            let fan_in = backward[b].len();
            let key = match (fan_out, fan_in) {
                (1, 1) => SplitKey::First(a),
                (_, 1) => match self.split_rank(fan_out, first_count[a], true) {
                    1 => SplitKey::First(a),
                    _ => SplitKey::Second(b),
                },
                (1, _) => match self.split_rank(fan_in, second_count[b], false) {
                    1 => SplitKey::First(a),
                    _ => SplitKey::Second(b),
                },
                _ => SplitKey::ManyToMany,
            };
            groups.entry(key).or_default().push(m);
        }
        groups.into_values().collect()
    }
}

impl ShardParser for IplomShard {
    fn group(&self, lines: &[Vec<&str>]) -> ShardGroups {
        let width = lines.first().map_or(0, Vec::len);
        let all: Vec<usize> = (0..lines.len()).collect();
        let mut partitions = Vec::new();
        for part in self.split_by_token_position(lines, all, width) {
            partitions.extend(self.split_by_bijection(lines, part, width));
        }
        // groups numbered by first member
        partitions.sort_by_key(|p| p[0]);
        let mut assignment = vec![0; lines.len()];
        let mut templates = Vec::with_capacity(partitions.len());
        for (g, members) in partitions.iter().enumerate() {
            let cards = cardinalities(lines, members, width);
            let template = (0..width)
                .map(|pos| {
                    if cards[pos] == 1 {
                        lines[members[0]][pos].to_string()
                    } else {
                        WILDCARD.to_string()
                    }
                })
                .collect();
            templates.push(template);
            for &m in members {
                assignment[m] = g;
            }
        }
        ShardGroups {
            assignment,
            templates,
        }
    }
}
