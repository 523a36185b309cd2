//! Naive reference implementations the engine is checked against. Each one
//! recomputes its answer from definitions, with no shared code.
#![allow(dead_code)]

pub mod checks;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;

/// A line counts as correct iff the majority truth class of its group is its own.
pub fn grouping_accuracy(pred: &[u32], truth: &[usize]) -> f64 {
    let mut votes: HashMap<u32, HashMap<usize, usize>> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *votes.entry(p).or_default().entry(t).or_default() += 1;
    }
    let majority: HashMap<u32, usize> = votes
        .into_iter()
        .map(|(g, v)| (g, v.into_iter().max_by_key(|&(t, c)| (c, std::cmp::Reverse(t))).unwrap().0))
        .collect();
    let ok = pred.iter().zip(truth).filter(|(p, t)| majority[p] == **t).count();
    ok as f64 / pred.len() as f64
}

/// `(tp, fp, fn, tn, precision, recall, f1)` by direct recount.
pub fn confusion(flags: &[bool], labels: &[bool]) -> (usize, usize, usize, usize, f64, f64, f64) {
    let mut c = [0usize; 4];
    for (&f, &l) in flags.iter().zip(labels) {
        c[match (f, l) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        }] += 1;
    }
    let p = if c[0] + c[1] == 0 { 0.0 } else { c[0] as f64 / (c[0] + c[1]) as f64 };
    let r = if c[0] + c[2] == 0 { 0.0 } else { c[0] as f64 / (c[0] + c[2]) as f64 };
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (c[0], c[1], c[2], c[3], p, r, f1)
}

/// Fraction of (positive, negative) pairs ordered correctly, ties half.
pub fn auroc_all_pairs(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li && !lj {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

/// Trapezoidal area under the ROC curve traced by descending thresholds.
pub fn auroc_trapezoid(scores: &[f64], labels: &[bool]) -> f64 {
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let mut pts = vec![(0.0, 0.0)];
    for t in thresholds {
        let tp = scores.iter().zip(labels).filter(|(&s, &l)| l && s >= t).count() as f64;
        let fp = scores.iter().zip(labels).filter(|(&s, &l)| !l && s >= t).count() as f64;
        pts.push((fp / neg, tp / pos));
    }
    pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0).sum()
}

/// Next-event ranking by rescanning the training sequences for every query.
pub fn naive_topk(train: &[Vec<u32>], order: usize, backoff: bool, context: &[u32], k: usize) -> Vec<u32> {
    let count_under = |ctx: &[u32]| -> BTreeMap<u32, u64> {
        let mut out = BTreeMap::new();
        for s in train {
            if ctx.is_empty() && s.len() == 1 {
                *out.entry(s[0]).or_default() += 1;
            }
            for i in 1..s.len() {
                if i >= ctx.len() && s[i - ctx.len()..i] == *ctx {
                    *out.entry(s[i]).or_default() += 1;
                }
            }
        }
        out
    };
    let rank = |m: BTreeMap<u32, u64>| -> Vec<u32> {
        let mut v: Vec<(u32, u64)> = m.into_iter().collect();
        v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().map(|x| x.0).collect()
    };
    let longest = context.len().min(order);
    let mut out: Vec<u32> = Vec::new();
    let lengths: Vec<usize> = if backoff { (0..=longest).rev().collect() } else { vec![longest] };
    for j in lengths {
        for id in rank(count_under(&context[context.len() - j..])) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
        if out.len() >= k {
            break;
        }
    }
    out.truncate(k);
    out
}

/// Per-position top-k verdicts for one test sequence.
pub fn naive_anomalous(train: &[Vec<u32>], order: usize, backoff: bool, window: usize, k: usize, seq: &[u32]) -> Vec<bool> {
    if seq.len() == 1 {
        return vec![!naive_topk(train, order, backoff, &[], k).contains(&seq[0])];
    }
    (1..seq.len())
        .map(|i| !naive_topk(train, order, backoff, &seq[i.saturating_sub(window)..i], k).contains(&seq[i]))
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// LOF straight from its definitions; the k-distance neighbourhood keeps ties.
pub fn naive_lof(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let n = points.len();
    let kdist = |p: usize| -> f64 {
        let mut d: Vec<f64> = (0..n).filter(|&q| q != p).map(|q| dist(&points[p], &points[q])).collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        d[k - 1]
    };
    let hood = |p: usize| -> Vec<usize> {
        let kd = kdist(p);
        (0..n).filter(|&q| q != p && dist(&points[p], &points[q]) <= kd).collect()
    };
    let lrd = |p: usize| -> f64 {
        let h = hood(p);
        let reach: f64 = h.iter().map(|&o| kdist(o).max(dist(&points[p], &points[o]))).sum();
        h.len() as f64 / reach
    };
    (0..n)
        .map(|p| {
            let h = hood(p);
            h.iter().map(|&o| lrd(o)).sum::<f64>() / h.len() as f64 / lrd(p)
        })
        .collect()
}

/// Core points and the partition of core points into density-connected sets.
pub fn naive_dbscan_cores(points: &[Vec<f64>], eps: f64, min_pts: usize) -> (Vec<bool>, BTreeSet<BTreeSet<usize>>) {
    let n = points.len();
    let near = |a: usize, b: usize| dist(&points[a], &points[b]) <= eps;
    let core: Vec<bool> = (0..n).map(|p| (0..n).filter(|&q| near(p, q)).count() >= min_pts).collect();
    // union-find over core-core edges
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    for a in 0..n {
        for b in 0..n {
            if core[a] && core[b] && near(a, b) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for p in (0..n).filter(|&p| core[p]) {
        let r = find(&mut parent, p);
        groups.entry(r).or_default().insert(p);
    }
    (core, groups.into_values().collect())
}

/// Minimum inertia over every assignment of `points` into `k` non-empty groups.
pub fn exhaustive_kmeans_inertia(points: &[f64], k: usize) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let labels: Vec<usize> = (0..n)
            .map(|_| {
                let l = c % k;
                c /= k;
                l
            })
            .collect();
        if (0..k).any(|g| !labels.contains(&g)) {
            continue;
        }
        let inertia: f64 = (0..k)
            .map(|g| {
                let m: Vec<f64> = (0..n).filter(|&i| labels[i] == g).map(|i| points[i]).collect();
                let mean = m.iter().sum::<f64>() / m.len() as f64;
                m.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
            })
            .sum();
        best = best.min(inertia);
    }
    best
}

/// Labels as a family of member sets, so renumbering does not matter.
pub fn partition_of(labels: &[i64]) -> BTreeSet<BTreeSet<usize>> {
    let mut groups: BTreeMap<i64, BTreeSet<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l >= 0 {
            groups.entry(l).or_default().insert(i);
        }
    }
    groups.into_values().collect()
}

/// Standard normal draw via Box-Muller.
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
