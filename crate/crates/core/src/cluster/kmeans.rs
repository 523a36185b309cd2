use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{squared_distance, ClusterAssignment, ClusterError};
use crate::represent::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
    /// Rows are L2-normalized first, which makes Euclidean rank-equivalent
    /// to cosine distance.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub distance: Distance,
}

fn default_max_iter() -> usize {
    300
}

fn default_tol() -> f64 {
    1e-6
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            seed,
            max_iter: default_max_iter(),
            tol: default_tol(),
            distance: Distance::Euclidean,
        }
    }
}

/// Nearest centroid and its squared distance; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = squared_distance(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![rows[rng.gen_range(0..rows.len())].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| squared_distance(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("k <= distinct rows");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        centroids.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(r, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

/// Lloyd iterations from k-means++ seeding.
pub fn kmeans_fit(x: &FeatureMatrix, config: &KMeansConfig) -> Result<ClusterAssignment, ClusterError> {
    if x.nrows() == 0 {
        return Err(ClusterError::EmptyMatrix);
    }
    if config.k == 0 {
        return Err(ClusterError::InvalidParam("k", "must be positive".into()));
    }
    let mut rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i)).collect();
    if config.distance == Distance::Cosine {
        for r in &mut rows {
            let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                r.iter_mut().for_each(|v| *v /= norm);
            }
        }
    }
    let mut distinct: Vec<&Vec<f64>> = rows.iter().collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
    distinct.dedup();
    if config.k > distinct.len() {
        return Err(ClusterError::KTooLarge {
            k: config.k,
            distinct: distinct.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = plus_plus_init(&rows, config.k, &mut rng);
    let dims = x.ncols();
    let mut trace = Vec::new();
    let mut labels;
    let mut iter = 0;
    loop {
        let assigned: Vec<(usize, f64)> = rows.par_iter().map(|r| nearest(r, &centroids)).collect();
        labels = assigned.iter().map(|a| a.0).collect::<Vec<_>>();
        trace.push(assigned.iter().map(|a| a.1).sum::<f64>());
        if iter >= config.max_iter {
            break;
        }
        iter += 1;
        let mut sums = vec![vec![0.0; dims]; config.k];
        let mut counts = vec![0usize; config.k];
        for (r, &l) in rows.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(r).for_each(|(s, v)| *s += v);
        }
        let mut shift: f64 = 0.0;
        for c in 0..config.k {
            // an empty cluster keeps its centroid
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(squared_distance(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        if shift < config.tol {
            let final_assign: Vec<(usize, f64)> = rows.par_iter().map(|r| nearest(r, &centroids)).collect();
            labels = final_assign.iter().map(|a| a.0).collect();
            trace.push(final_assign.iter().map(|a| a.1).sum());
            break;
        }
    }
    Ok(ClusterAssignment {
        row_ids: x.row_ids.clone(),
        labels: labels.into_iter().map(|l| l as i64).collect(),
        inertia: trace.last().copied(),
        centroids: Some(centroids),
        inertia_trace: trace,
        core_points: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points(v: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&v.iter().map(|&x| vec![x]).collect::<Vec<_>>())
    }

    fn sorted_centroids(a: &ClusterAssignment) -> Vec<f64> {
        let mut c: Vec<f64> = a.centroids.as_ref().unwrap().iter().map(|c| c[0]).collect();
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        c
    }

    #[test]
    fn four_points() {
        for seed in 0..10 {
            let a = kmeans_fit(&points(&[0.0, 1.0, 10.0, 11.0]), &KMeansConfig::new(2, seed)).unwrap();
            assert_eq!(a.labels[0], a.labels[1]);
            assert_eq!(a.labels[2], a.labels[3]);
            assert_ne!(a.labels[0], a.labels[2]);
            assert_eq!(sorted_centroids(&a), vec![0.5, 10.5]);
            assert!((a.inertia.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_equals_n() {
        let a = kmeans_fit(&points(&[3.0, 1.0, 2.0]), &KMeansConfig::new(3, 1)).unwrap();
        assert_eq!(a.inertia, Some(0.0));
        assert_eq!(a.cluster_count(), 3);
    }

    #[test]
    fn duplicated_data_same_centroids() {
        let base = [0.0, 0.5, 1.0, 20.0, 20.5, 21.0, 50.0, 51.0];
        let doubled: Vec<f64> = base.iter().chain(base.iter()).copied().collect();
        let a = kmeans_fit(&points(&base), &KMeansConfig::new(3, 4)).unwrap();
        let b = kmeans_fit(&points(&doubled), &KMeansConfig::new(3, 4)).unwrap();
        assert_eq!(sorted_centroids(&a), sorted_centroids(&b));
    }

    #[test]
    fn inertia_never_increases() {
        let rows: Vec<Vec<f64>> = (0..60).map(|i| vec![(i * 37 % 17) as f64, (i * 11 % 23) as f64]).collect();
        let a = kmeans_fit(&FeatureMatrix::from_rows(&rows), &KMeansConfig::new(4, 9)).unwrap();
        for w in a.inertia_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "{:?}", a.inertia_trace);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            kmeans_fit(&points(&[1.0, 1.0]), &KMeansConfig::new(2, 0)),
            Err(ClusterError::KTooLarge { k: 2, distinct: 1 })
        );
        assert_eq!(kmeans_fit(&points(&[]), &KMeansConfig::new(1, 0)), Err(ClusterError::EmptyMatrix));
    }
}
