use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitProtocol {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_dev_fraction")]
    pub dev_fraction_of_train: f64,
    #[serde(default = "default_true")]
    pub normal_only_training: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_test_fraction() -> f64 {
    0.2
}
fn default_dev_fraction() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}

impl Default for SplitProtocol {
    fn default() -> Self {
        SplitProtocol {
            test_fraction: default_test_fraction(),
            dev_fraction_of_train: default_dev_fraction(),
            normal_only_training: true,
            seed: 0,
        }
    }
}

impl SplitProtocol {
    pub fn problems(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let frac = |v: f64| v > 0.0 && v < 1.0;
        if !frac(self.test_fraction) {
            out.push(("test_fraction", "must lie in (0, 1)".to_string()));
        }
        if !frac(self.dev_fraction_of_train) {
            out.push(("dev_fraction_of_train", "must lie in (0, 1)".to_string()));
        }
        out
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("invalid split protocol: {0}: {1}")]
    InvalidProtocol(&'static str, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitWarning {
    /// The anomalies alone exceed the requested test share.
    NotEnoughNormals { requested: f64, actual: f64 },
}

/// Disjoint, exhaustive index sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
    pub warnings: Vec<SplitWarning>,
}

/// Indices `0..n` in a seeded random order.
pub fn seeded_shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// With normal-only training every anomaly goes to test, which is then
/// topped up with shuffled normals to `round(test_fraction * n)`. Dev takes
/// `round(dev_fraction_of_train * rest)` of the remaining shuffled
/// instances and train keeps the others.
pub fn split_dataset(labels: &[bool], protocol: &SplitProtocol) -> Result<Split, SplitError> {
    if let Some((field, message)) = protocol.problems().into_iter().next() {
        return Err(SplitError::InvalidProtocol(field, message));
    }
    let n = labels.len();
    let target = (protocol.test_fraction * n as f64).round() as usize;
    let order = seeded_shuffle(n, protocol.seed);
    let mut warnings = Vec::new();
    let (mut test, rest): (Vec<usize>, Vec<usize>) = if protocol.normal_only_training {
        let anomalies: Vec<usize> = (0..n).filter(|&i| labels[i]).collect();
        let normals: Vec<usize> = order.into_iter().filter(|&i| !labels[i]).collect();
        let top_up = target.saturating_sub(anomalies.len()).min(normals.len());
        if anomalies.len() > target {
            warnings.push(SplitWarning::NotEnoughNormals {
                requested: protocol.test_fraction,
                actual: anomalies.len() as f64 / n as f64,
            });
        }
        let mut test = anomalies;
        test.extend_from_slice(&normals[..top_up]);
        (test, normals[top_up..].to_vec())
    } else {
        (order[..target].to_vec(), order[target..].to_vec())
    };
    let dev_len = (protocol.dev_fraction_of_train * rest.len() as f64).round() as usize;
    let mut dev = rest[..dev_len].to_vec();
    let mut train = rest[dev_len..].to_vec();
    test.sort_unstable();
    dev.sort_unstable();
    train.sort_unstable();
    Ok(Split {
        train,
        dev,
        test,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(normal: usize, anomalous: usize) -> Vec<bool> {
        let mut l = vec![false; normal];
        l.extend(vec![true; anomalous]);
        l
    }

    #[test]
    fn anomalies_fill_test() {
        let s = split_dataset(&labels(80, 20), &SplitProtocol::default()).unwrap();
        assert_eq!(s.test, (80..100).collect::<Vec<_>>());
        assert_eq!(s.train.len() + s.dev.len(), 80);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn all_normal() {
        let s = split_dataset(&labels(100, 0), &SplitProtocol::default()).unwrap();
        assert_eq!(s.test.len(), 20);
        assert_eq!(s.dev.len(), 8);
        assert_eq!(s.train.len(), 72);
    }

    #[test]
    fn markov_sizes() {
        let s = split_dataset(&labels(500, 25), &SplitProtocol::default()).unwrap();
        assert_eq!((s.test.len(), s.dev.len(), s.train.len()), (105, 42, 378));
    }

    #[test]
    fn too_many_anomalies_warns() {
        let s = split_dataset(&labels(5, 5), &SplitProtocol::default()).unwrap();
        assert_eq!(s.test.len(), 5);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn seeded_and_exhaustive() {
        let l: Vec<bool> = (0..57).map(|i| i % 7 == 0).collect();
        let p = SplitProtocol {
            seed: 3,
            ..Default::default()
        };
        let a = split_dataset(&l, &p).unwrap();
        assert_eq!(a, split_dataset(&l, &p).unwrap());
        let mut all: Vec<usize> = a.train.iter().chain(&a.dev).chain(&a.test).copied().collect();
        all.sort();
        assert_eq!(all, (0..57).collect::<Vec<_>>());
        assert!(a.train.iter().chain(&a.dev).all(|&i| !l[i]));
    }
}
