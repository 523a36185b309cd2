//! Randomized comparisons between the engine and the naive references. Each
//! check returns a short summary on success and the first mismatch otherwise.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use loglens::cluster::{dbscan_fit, kmeans_fit, DbscanConfig, KMeansConfig, NOISE};
use loglens::detect_seq::{anomalous_positions, detect_sequence, ngram_fit, NextEventPredictor, TopKConfig};
use loglens::detect_stat::{iforest_fit_score, lof_score, IForestConfig, LofConfig};
use loglens::evaluate::{auroc, confusion_and_f1};
use loglens::represent::{EventSequenceSet, FeatureMatrix};

use super::*;

pub type Check = Result<String, String>;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn random_sequences(rng: &mut impl Rng, count: usize, max_len: usize, alphabet: u32) -> Vec<Vec<u32>> {
    (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            (0..len).map(|_| rng.gen_range(1..=alphabet)).collect()
        })
        .collect()
}

/// Flags and per-position verdicts against [`naive_anomalous`] over random
/// (train, test) pairs on a 10-symbol alphabet.
pub fn sequence_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = 0usize;
    for case in 0..cases {
        let (n_train, n_test) = (rng.gen_range(1..=6), rng.gen_range(1..=4));
        let train = random_sequences(&mut rng, n_train, 15, 10);
        let test = random_sequences(&mut rng, n_test, 15, 10);
        let order = rng.gen_range(1..=3);
        let backoff = rng.gen_bool(0.8);
        let k = rng.gen_range(1..=6);
        let window = if rng.gen_bool(0.3) { Some(rng.gen_range(1..=4)) } else { None };
        let model = ngram_fit(&EventSequenceSet::from_sequences(train.clone()), order, backoff).map_err(|e| e.to_string())?;
        let cfg = TopKConfig { window, ..TopKConfig::with_k(k) };
        let result = detect_sequence(&model, &EventSequenceSet::from_sequences(test.clone()), &cfg).map_err(|e| e.to_string())?;
        for (i, seq) in test.iter().enumerate() {
            let expected = naive_anomalous(&train, order, backoff, window.unwrap_or(order), k, seq);
            let got = anomalous_positions(&model, seq, &cfg).map_err(|e| e.to_string())?;
            if got != expected {
                return Err(format!("case {case}: positions {got:?} != oracle {expected:?} for {seq:?}"));
            }
            if result.flags[i] != expected.iter().any(|&a| a) {
                return Err(format!("case {case}: partition flag disagrees for {seq:?}"));
            }
            positions += expected.len();
        }
        let ctx: Vec<u32> = test[0].iter().copied().take(3).collect();
        let naive = naive_topk(&train, order, backoff, &ctx, k);
        if model.predict_topk(&ctx, k).map_err(|e| e.to_string())? != naive {
            return Err(format!("case {case}: top-k ranking differs for context {ctx:?}"));
        }
    }
    Ok(format!("{cases} cases, {positions} positions agree"))
}

/// Anomalous positions shrink (as sets) as k grows through 1, 3, 5, 10.
pub fn k_monotonicity(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let train = random_sequences(&mut rng, 5, 20, 10);
        let seq = random_sequences(&mut rng, 1, 20, 10).remove(0);
        let order = rng.gen_range(1..=3);
        let model = ngram_fit(&EventSequenceSet::from_sequences(train), order, true).map_err(|e| e.to_string())?;
        let mut prev: Option<Vec<bool>> = None;
        for k in [1, 3, 5, 10] {
            let cur = anomalous_positions(&model, &seq, &TopKConfig::with_k(k)).map_err(|e| e.to_string())?;
            if let Some(p) = &prev {
                if cur.iter().zip(p).any(|(&c, &p)| c && !p) {
                    return Err(format!("case {case}: k={k} flags a position k-1 step did not"));
                }
            }
            prev = Some(cur);
        }
    }
    Ok(format!("{cases} cases monotone"))
}

/// F1 against recount and AUROC against all-pairs and trapezoid references.
pub fn metrics_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(2..60);
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
        labels[0] = true;
        labels[1] = false;
        labels.shuffle(&mut rng);
        let flags: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
        // coarse grid so ties occur
        let scores: Vec<f64> = (0..n).map(|_| (rng.gen_range(0..20) as f64) / 10.0).collect();

        let m = confusion_and_f1(&flags, &labels).map_err(|e| e.to_string())?;
        let (tp, fp, fn_, tn, p, r, f1) = confusion(&flags, &labels);
        if (m.tp, m.fp, m.fn_, m.tn) != (tp, fp, fn_, tn) || !close(m.precision, p, 1e-9) || !close(m.recall, r, 1e-9) || !close(m.f1, f1, 1e-9)
        {
            return Err(format!("case {case}: confusion {m:?} != ({tp},{fp},{fn_},{tn},{p},{r},{f1})"));
        }
        let a = auroc(&scores, &labels).map_err(|e| e.to_string())?;
        let pairs = auroc_all_pairs(&scores, &labels);
        let trap = auroc_trapezoid(&scores, &labels);
        if !close(a, pairs, 1e-9) || !close(a, trap, 1e-9) {
            return Err(format!("case {case}: auroc {a} vs pairs {pairs} vs trapezoid {trap}"));
        }
    }
    let exact = [
        (auroc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]), 1.0),
        (auroc(&[0.9, 0.1, 0.2, 0.8], &[true, true, false, false]), 0.5),
        (auroc(&[0.3; 4], &[true, false, true, false]), 0.5),
    ];
    for (got, want) in exact {
        let got = got.map_err(|e| e.to_string())?;
        if got != want {
            return Err(format!("auroc example {got} != {want}"));
        }
    }
    Ok(format!("{cases} cases, F1 and AUROC match to 1e-9"))
}

fn matrix(points: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(points)
}

/// The 4-point fixture reaches the exhaustive optimum.
pub fn kmeans_exhaustive() -> Check {
    let pts = [0.0, 1.0, 10.0, 11.0];
    let best = exhaustive_kmeans_inertia(&pts, 2);
    for seed in 0..10 {
        let a = kmeans_fit(&matrix(&pts.map(|p| vec![p])), &KMeansConfig::new(2, seed)).map_err(|e| e.to_string())?;
        let inertia = a.inertia.unwrap_or(f64::NAN);
        if !close(inertia, best, 1e-12) || partition_of(&a.labels) != BTreeSet::from([BTreeSet::from([0, 1]), BTreeSet::from([2, 3])]) {
            return Err(format!("seed {seed}: inertia {inertia} vs optimum {best}, labels {:?}", a.labels));
        }
        let mut c: Vec<f64> = a.centroids.unwrap().iter().map(|c| c[0]).collect();
        c.sort_by(|x, y| x.partial_cmp(y).unwrap());
        if c != vec![0.5, 10.5] {
            return Err(format!("seed {seed}: centroids {c:?}"));
        }
    }
    Ok(format!("optimum inertia {best} over 10 seeds"))
}

fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| vec![rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0)]).collect()
}

/// Core points, core partition, border attachment and noise against
/// brute-force density reachability on sets of at most 8 points.
pub fn dbscan_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(1..=8);
        let pts = random_points(&mut rng, n);
        let eps = rng.gen_range(0.3..2.5);
        let min_pts = rng.gen_range(1..=4);
        let a = dbscan_fit(&matrix(&pts), &DbscanConfig { eps, min_pts }).map_err(|e| e.to_string())?;
        let (core, groups) = naive_dbscan_cores(&pts, eps, min_pts);
        if a.core_points.as_ref() != Some(&core) {
            return Err(format!("case {case}: core points differ"));
        }
        let core_labels: Vec<i64> = a.labels.iter().zip(&core).map(|(&l, &c)| if c { l } else { NOISE }).collect();
        if partition_of(&core_labels) != groups {
            return Err(format!("case {case}: core partition differs"));
        }
        let near = |p: usize, q: usize| {
            let d: f64 = pts[p].iter().zip(&pts[q]).map(|(x, y)| (x - y) * (x - y)).sum();
            d.sqrt() <= eps
        };
        for p in (0..n).filter(|&p| !core[p]) {
            let reachable: Vec<i64> = (0..n).filter(|&q| core[q] && near(p, q)).map(|q| a.labels[q]).collect();
            let ok = if reachable.is_empty() { a.labels[p] == NOISE } else { reachable.contains(&a.labels[p]) };
            if !ok {
                return Err(format!("case {case}: border/noise point {p} labelled {}", a.labels[p]));
            }
        }
    }
    Ok(format!("{cases} point sets agree"))
}

/// Row permutations change only label numbering (k-means on separated
/// blobs; DBSCAN core points on random sets).
pub fn shuffle_invariance(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let mut pts = Vec::new();
        for c in 0..3 {
            for _ in 0..rng.gen_range(3..8) {
                pts.push(vec![c as f64 * 20.0 + rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]);
            }
        }
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
        let unshuffle = |labels: &[i64]| -> Vec<i64> {
            let mut out = vec![0; labels.len()];
            for (pos, &orig) in perm.iter().enumerate() {
                out[orig] = labels[pos];
            }
            out
        };

        let cfg = KMeansConfig::new(3, case as u64);
        let a = kmeans_fit(&matrix(&pts), &cfg).map_err(|e| e.to_string())?;
        let b = kmeans_fit(&matrix(&shuffled), &cfg).map_err(|e| e.to_string())?;
        if partition_of(&a.labels) != partition_of(&unshuffle(&b.labels)) {
            return Err(format!("case {case}: k-means partition changed under shuffling"));
        }

        let rand_pts = random_points(&mut rng, 8);
        let shuffled: Vec<Vec<f64>> = perm.iter().filter(|&&i| i < 8).map(|&i| rand_pts[i].clone()).collect();
        let order: Vec<usize> = perm.iter().copied().filter(|&i| i < 8).collect();
        let d = DbscanConfig { eps: 1.2, min_pts: 3 };
        let a = dbscan_fit(&matrix(&rand_pts), &d).map_err(|e| e.to_string())?;
        let b = dbscan_fit(&matrix(&shuffled), &d).map_err(|e| e.to_string())?;
        let core_only = |labels: &[i64], core: &[bool]| -> Vec<i64> {
            labels.iter().zip(core).map(|(&l, &c)| if c { l } else { NOISE }).collect()
        };
        let mut back = vec![NOISE; 8];
        let b_core = core_only(&b.labels, b.core_points.as_ref().unwrap());
        for (pos, &orig) in order.iter().enumerate() {
            back[orig] = b_core[pos];
        }
        if partition_of(&core_only(&a.labels, a.core_points.as_ref().unwrap())) != partition_of(&back) {
            return Err(format!("case {case}: DBSCAN core partition changed under shuffling"));
        }
    }
    Ok(format!("{cases} permutations"))
}

/// LOF against the definition on sets of at most 10 points.
pub fn lof_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..cases {
        let n = rng.gen_range(3..=10);
        let pts = random_points(&mut rng, n);
        let k = rng.gen_range(1..n);
        let r = lof_score(&matrix(&pts), &LofConfig { k, threshold: 1.5 }).map_err(|e| e.to_string())?;
        let want = naive_lof(&pts, k);
        for (i, (g, w)) in r.scores.iter().zip(&want).enumerate() {
            if !close(*g, *w, 1e-9) {
                return Err(format!("case {case}: point {i} lof {g} vs {w}"));
            }
        }
    }
    let square = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![10.0, 10.0]];
    let r = lof_score(&matrix(&square), &LofConfig { k: 2, threshold: 1.5 }).map_err(|e| e.to_string())?;
    if !(r.scores[4] > 1.5 && r.scores[..4].iter().all(|s| (0.8..=1.3).contains(s))) {
        return Err(format!("square example scores {:?}", r.scores));
    }
    Ok(format!("{cases} point sets match to 1e-9"))
}

/// A 10-sigma point outscores all 100 inliers of a tight Gaussian cluster.
pub fn iforest_planted(seeds: u64) -> Result<u64, String> {
    let mut wins = 0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let mut pts: Vec<Vec<f64>> = (0..100).map(|_| vec![gaussian(&mut rng), gaussian(&mut rng)]).collect();
        pts.push(vec![10.0, 0.0]);
        let cfg = IForestConfig { seed, ..IForestConfig::default() };
        let r = iforest_fit_score(&matrix(&pts), &cfg).map_err(|e| e.to_string())?;
        if r.scores[..100].iter().all(|&s| s < r.scores[100]) {
            wins += 1;
        }
    }
    Ok(wins)
}
