use indexmap::IndexSet;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, RepresentError};
use crate::log_model::LogRecordBatch;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalScheme {
    /// Codes by first appearance.
    #[default]
    Label,
    OneHot,
    /// Codes by lexicographic value order.
    Ordinal,
}

/// Observed values of one field; a value's code is its index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub field: String,
    pub values: Vec<String>,
}

impl Codebook {
    pub fn code(&self, value: &str) -> Option<usize> {
        self.values.iter().position(|v| v == value)
    }

    /// Inverse of the label/ordinal coding; `-1` and unknown codes give `None`.
    pub fn decode(&self, code: i64) -> Option<&str> {
        usize::try_from(code).ok().and_then(|c| self.values.get(c)).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalEncoding {
    pub matrix: FeatureMatrix,
    pub codebooks: Vec<Codebook>,
}

/// Encodes the named fields of every record. Missing values become `-1`
/// (label, ordinal) or an all-zero segment (one-hot).
pub fn encode_categorical(
    batch: &LogRecordBatch,
    fields: &[String],
    scheme: CategoricalScheme,
) -> Result<CategoricalEncoding, RepresentError> {
    let n = batch.len();
    let mut codebooks = Vec::with_capacity(fields.len());
    for f in fields {
        let mut seen: IndexSet<&str> = IndexSet::new();
        for i in 0..n {
            if let Some(v) = batch.field_value(i, f) {
                seen.insert(v);
            }
        }
        if seen.is_empty() {
            return Err(RepresentError::UnknownField(f.clone()));
        }
        let mut values: Vec<String> = seen.into_iter().map(str::to_string).collect();
        if scheme == CategoricalScheme::Ordinal {
            values.sort();
        }
        codebooks.push(Codebook {
            field: f.clone(),
            values,
        });
    }

    let row_ids = (0..n).map(|i| i.to_string()).collect();
    let matrix = match scheme {
        CategoricalScheme::Label | CategoricalScheme::Ordinal => {
            let mut values = Array2::from_elem((n, fields.len()), -1.0);
            for (j, book) in codebooks.iter().enumerate() {
                for i in 0..n {
                    if let Some(c) = batch.field_value(i, &book.field).and_then(|v| book.code(v)) {
                        values[[i, j]] = c as f64;
                    }
                }
            }
            FeatureMatrix::new(row_ids, fields.to_vec(), values)
        }
        CategoricalScheme::OneHot => {
            let columns: Vec<String> = codebooks
                .iter()
                .flat_map(|b| b.values.iter().map(move |v| format!("{}={v}", b.field)))
                .collect();
            let mut values = Array2::zeros((n, columns.len()));
            let mut offset = 0;
            for book in &codebooks {
                for i in 0..n {
                    if let Some(c) = batch.field_value(i, &book.field).and_then(|v| book.code(v)) {
                        values[[i, offset + c]] = 1.0;
                    }
                }
                offset += book.values.len();
            }
            FeatureMatrix::new(row_ids, columns, values)
        }
    };
    Ok(CategoricalEncoding { matrix, codebooks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_model::LogRecord;

    fn batch(values: &[Option<&str>]) -> LogRecordBatch {
        let records = values.iter().map(|v| {
            let mut r = LogRecord::with_body("x");
            if let Some(v) = v {
                r.attributes.insert("color".into(), v.to_string());
            }
            r
        });
        LogRecordBatch::from_records("t", records.collect::<Vec<_>>())
    }

    fn col(e: &CategoricalEncoding) -> Vec<f64> {
        e.matrix.values.column(0).to_vec()
    }

    #[test]
    fn label_codes_by_first_appearance() {
        let e = encode_categorical(&batch(&[Some("red"), Some("blue"), Some("red")]), &["color".into()], CategoricalScheme::Label)
            .unwrap();
        assert_eq!(col(&e), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn one_hot_rows() {
        let e = encode_categorical(
            &batch(&[Some("red"), Some("blue"), None]),
            &["color".into()],
            CategoricalScheme::OneHot,
        )
        .unwrap();
        assert_eq!(e.matrix.column_names, vec!["color=red", "color=blue"]);
        assert_eq!(e.matrix.row(0), vec![1.0, 0.0]);
        assert_eq!(e.matrix.row(1), vec![0.0, 1.0]);
        assert_eq!(e.matrix.row(2), vec![0.0, 0.0]);
    }

    #[test]
    fn ordinal_codes_and_decode() {
        let b = batch(&[Some("b"), Some("a"), Some("c"), None]);
        let e = encode_categorical(&b, &["color".into()], CategoricalScheme::Ordinal).unwrap();
        assert_eq!(col(&e), vec![1.0, 0.0, 2.0, -1.0]);
        for i in 0..b.len() {
            let decoded = e.codebooks[0].decode(e.matrix.values[[i, 0]] as i64);
            assert_eq!(decoded, b.field_value(i, "color"));
        }
    }

    #[test]
    fn unknown_field() {
        let r = encode_categorical(&batch(&[Some("a")]), &["shape".into()], CategoricalScheme::Label);
        assert_eq!(r.unwrap_err(), RepresentError::UnknownField("shape".into()));
    }
}
