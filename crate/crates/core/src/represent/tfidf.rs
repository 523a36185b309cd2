use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;

use super::{FeatureMatrix, RepresentError};

/// `ln((1 + n_docs) / (1 + df)) + 1`; finite even for unseen terms.
pub fn smoothed_idf(n_docs: usize, df: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

/// TF-IDF over whitespace tokens with L2-normalized rows. With `vocab_limit`
/// only the highest document-frequency terms are kept (ties by term order).
pub fn vectorize_tfidf<S: AsRef<str>>(corpus: &[S], vocab_limit: Option<usize>) -> Result<FeatureMatrix, RepresentError> {
    if corpus.is_empty() {
        return Err(RepresentError::EmptyCorpus);
    }
    let docs: Vec<Vec<&str>> = corpus.iter().map(|d| d.as_ref().split_whitespace().collect()).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in &docs {
        let mut seen: Vec<&str> = doc.clone();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1;
        }
    }
    let mut vocab: Vec<&str> = df.keys().copied().collect();
    if let Some(limit) = vocab_limit {
        if limit < vocab.len() {
            let mut by_df = vocab.clone();
            by_df.sort_by(|a, b| df[b].cmp(&df[a]).then(a.cmp(b)));
            by_df.truncate(limit);
            by_df.sort_unstable();
            vocab = by_df;
        }
    }
    let column: HashMap<&str, usize> = vocab.iter().enumerate().map(|(j, t)| (*t, j)).collect();
    let n = docs.len();
    let mut values = Array2::zeros((n, vocab.len()));
    for (i, doc) in docs.iter().enumerate() {
        for t in doc {
            if let Some(&j) = column.get(t) {
                values[[i, j]] += 1.0;
            }
        }
    }
    for (j, t) in vocab.iter().enumerate() {
        let idf = smoothed_idf(n, df[t]);
        values.column_mut(j).mapv_inplace(|v| v * idf);
    }
    let mut m = FeatureMatrix::new(
        (0..n).map(|i| i.to_string()).collect(),
        vocab.iter().map(|t| t.to_string()).collect(),
        values,
    );
    m.l2_normalize();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_doc_example() {
        let m = vectorize_tfidf(&["a b", "a c"], None).unwrap();
        assert_eq!(m.column_names, vec!["a", "b", "c"]);
        assert_eq!(smoothed_idf(2, 2), 1.0);
        assert!((smoothed_idf(2, 1) - (1.5f64.ln() + 1.0)).abs() < 1e-12);
        let r = m.row(0);
        assert!((r[0] - 0.5797).abs() < 1e-4, "{r:?}");
        assert!((r[1] - 0.8148).abs() < 1e-4);
        assert_eq!(r[2], 0.0);
    }

    #[test]
    fn single_doc_follows_counts() {
        let m = vectorize_tfidf(&["x x y"], None).unwrap();
        let r = m.row(0);
        assert!((r[0] / r[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn vocab_limit_keeps_frequent_terms() {
        let m = vectorize_tfidf(&["z a", "z b", "z a"], Some(2)).unwrap();
        assert_eq!(m.column_names, vec!["a", "z"]);
    }

    #[test]
    fn empty_corpus_and_blank_docs() {
        assert_eq!(vectorize_tfidf::<&str>(&[], None), Err(RepresentError::EmptyCorpus));
        let m = vectorize_tfidf(&["", "q"], None).unwrap();
        assert_eq!(m.row(0), vec![0.0]);
    }

    proptest::proptest! {
        #[test]
        fn rows_unit_norm_and_non_negative(docs in proptest::collection::vec("[abc ]{0,12}", 1..8)) {
            let m = vectorize_tfidf(&docs, None).unwrap();
            for i in 0..m.nrows() {
                let r = m.row(i);
                proptest::prop_assert!(r.iter().all(|&v| v >= 0.0));
                let norm: f64 = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                proptest::prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9);
            }
        }
    }
}
