use std::collections::BTreeMap;
use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{smoothed_idf, FeatureMatrix};
use crate::parse::ParseResult;
use crate::preprocess::PartitionSet;

/// Per-partition template id sequences, in member order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSequenceSet {
    pub partition_ids: Vec<String>,
    pub sequences: Vec<Vec<u32>>,
    /// One more than the largest id that may appear.
    pub vocabulary_size: usize,
}

impl EventSequenceSet {
    /// Sequences named "0", "1", ...; the vocabulary covers the largest id.
    pub fn from_sequences(sequences: Vec<Vec<u32>>) -> Self {
        let vocabulary_size = sequences.iter().flatten().max().map_or(0, |&m| m as usize + 1);
        EventSequenceSet {
            partition_ids: (0..sequences.len()).map(|i| i.to_string()).collect(),
            sequences,
            vocabulary_size,
        }
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// The sequences at `indices`, keeping this set's vocabulary.
    pub fn subset(&self, indices: &[usize]) -> Self {
        EventSequenceSet {
            partition_ids: indices.iter().map(|&i| self.partition_ids[i].clone()).collect(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
            vocabulary_size: self.vocabulary_size,
        }
    }

    /// `partition_id,ids` with ids space-separated.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["partition_id", "ids"])?;
        for (id, seq) in self.partition_ids.iter().zip(&self.sequences) {
            let ids = seq.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
            w.write_record([id.as_str(), ids.as_str()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, vocabulary_size: usize) -> Result<Self, SequenceCsvError> {
        let mut partition_ids = Vec::new();
        let mut sequences = Vec::new();
        for (row, rec) in csv::Reader::from_reader(reader).records().enumerate() {
            let rec = rec?;
            let seq = rec[1]
                .split_whitespace()
                .map(|t| t.parse::<u32>().map_err(|_| SequenceCsvError::BadId(row, t.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(&bad) = seq.iter().find(|&&id| id as usize >= vocabulary_size) {
                return Err(SequenceCsvError::BadId(row, bad.to_string()));
            }
            partition_ids.push(rec[0].to_string());
            sequences.push(seq);
        }
        Ok(EventSequenceSet {
            partition_ids,
            sequences,
            vocabulary_size,
        })
    }
}

#[derive(Debug, Error)]
pub enum SequenceCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {0}: bad event id `{1}`")]
    BadId(usize, String),
}

/// Projects each partition onto its members' template ids.
pub fn encode_sequential(parsed: &ParseResult, parts: &PartitionSet) -> EventSequenceSet {
    EventSequenceSet {
        partition_ids: parts.ids(),
        sequences: parts
            .partitions
            .iter()
            .map(|p| p.members.iter().map(|&m| parsed.line_template_ids[m]).collect())
            .collect(),
        vocabulary_size: parsed.vocabulary_size(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum QuantWeighting {
    #[default]
    Count,
    Tfidf,
}

/// One row per partition, one column per used template (`t<id>`). `Tfidf`
/// treats partitions as documents and normalizes rows like
/// [`vectorize_tfidf`](super::vectorize_tfidf).
pub fn encode_quantitative(parsed: &ParseResult, parts: &PartitionSet, weighting: QuantWeighting) -> FeatureMatrix {
    let used: Vec<u32> = parsed.templates.iter().filter(|t| t.count > 0).map(|t| t.id).collect();
    let column: BTreeMap<u32, usize> = used.iter().enumerate().map(|(j, &id)| (id, j)).collect();
    let mut values = Array2::zeros((parts.len(), used.len()));
    for (i, p) in parts.partitions.iter().enumerate() {
        for &m in &p.members {
            values[[i, column[&parsed.line_template_ids[m]]]] += 1.0;
        }
    }
    let mut matrix = FeatureMatrix::new(parts.ids(), used.iter().map(|id| format!("t{id}")).collect(), values);
    if weighting == QuantWeighting::Tfidf {
        let n = matrix.nrows();
        for mut col in matrix.values.columns_mut() {
            let df = col.iter().filter(|&&v| v > 0.0).count();
            col *= smoothed_idf(n, df);
        }
        matrix.l2_normalize();
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_model::LogRecordBatch;
    use crate::parse::{parse_bodies, ParserConfig};
    use crate::preprocess::{partition, PartitionConfig};

    fn parsed(bodies: &[&str]) -> ParseResult {
        parse_bodies(bodies, &ParserConfig::default()).unwrap()
    }

    #[test]
    fn sequences_follow_members() {
        let bodies = ["a 1", "a 2", "b b", "a 3", "b b"];
        let p = parsed(&bodies);
        let parts = partition(&LogRecordBatch::from_bodies(bodies), &PartitionConfig::fixed(3)).unwrap();
        let s = encode_sequential(&p, &parts);
        assert_eq!(s.sequences, vec![vec![1, 1, 2], vec![1, 2]]);
        assert_eq!(s.vocabulary_size, 3);
        assert!(s.sequences.iter().flatten().all(|&id| (id as usize) < s.vocabulary_size));
    }

    #[test]
    fn sliding_windows_agree_with_direct_indexing() {
        let bodies: Vec<String> = (0..9).map(|i| if i % 3 == 0 { format!("x {i}") } else { "y z".into() }).collect();
        let p = parse_bodies(&bodies, &ParserConfig::default()).unwrap();
        let parts = partition(&LogRecordBatch::from_bodies(&bodies), &PartitionConfig::sliding(4, 2)).unwrap();
        let s = encode_sequential(&p, &parts);
        for (seq, part) in s.sequences.iter().zip(&parts.partitions) {
            let direct: Vec<u32> = part.members.iter().map(|&m| p.line_template_ids[m]).collect();
            assert_eq!(seq, &direct);
        }
        // overlap of consecutive windows carries the same ids
        assert_eq!(s.sequences[0][2..], s.sequences[1][..2]);
    }

    #[test]
    fn quantitative_counts_and_conservation() {
        let bodies = ["a 1", "a 2", "b b", "a 3", "b b", "b b"];
        let p = parsed(&bodies);
        let parts = partition(&LogRecordBatch::from_bodies(bodies), &PartitionConfig::fixed(3)).unwrap();
        let m = encode_quantitative(&p, &parts, QuantWeighting::Count);
        assert_eq!(m.column_names, vec!["t1", "t2"]);
        assert_eq!(m.row(0), vec![2.0, 1.0]);
        for (i, part) in parts.partitions.iter().enumerate() {
            assert_eq!(m.row(i).iter().sum::<f64>(), part.members.len() as f64);
        }
    }

    #[test]
    fn tfidf_weighting_of_ubiquitous_template() {
        let bodies = ["a 1", "b b", "a 2", "c c"];
        let p = parsed(&bodies);
        let parts = partition(&LogRecordBatch::from_bodies(bodies), &PartitionConfig::fixed(2)).unwrap();
        let m = encode_quantitative(&p, &parts, QuantWeighting::Tfidf);
        // t1 is in both partitions (idf 1), t2 and t3 in one each
        let idf = smoothed_idf(2, 1);
        let r = m.row(0);
        assert!((r[0] / r[1] - 1.0 / idf).abs() < 1e-12);
        let norm: f64 = r.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trip() {
        let s = EventSequenceSet::from_sequences(vec![vec![1, 2, 3], vec![], vec![4]]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = EventSequenceSet::read_csv(buf.as_slice(), s.vocabulary_size).unwrap();
        assert_eq!(back, s);
        assert!(EventSequenceSet::read_csv(buf.as_slice(), 3).is_err());
    }
}
