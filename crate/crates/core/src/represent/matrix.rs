use std::io::Write;

use ndarray::Array2;

/// Dense rows of features with their row and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub row_ids: Vec<String>,
    pub column_names: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, column_names: Vec<String>, values: Array2<f64>) -> Self {
        assert_eq!(values.nrows(), row_ids.len(), "row count");
        assert_eq!(values.ncols(), column_names.len(), "column count");
        FeatureMatrix {
            row_ids,
            column_names,
            values,
        }
    }

    /// Rows named "0", "1", ... and columns "f0", "f1", ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut values = Array2::zeros((rows.len(), ncols));
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), ncols, "ragged rows");
            for (j, v) in r.iter().enumerate() {
                values[[i, j]] = *v;
            }
        }
        FeatureMatrix::new(
            (0..rows.len()).map(|i| i.to_string()).collect(),
            (0..ncols).map(|j| format!("f{j}")).collect(),
            values,
        )
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).to_vec()
    }

    /// The rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix::new(
            indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            self.column_names.clone(),
            self.values.select(ndarray::Axis(0), indices),
        )
    }

    /// Scales every non-zero row to unit L2 norm.
    pub fn l2_normalize(&mut self) {
        for mut row in self.values.rows_mut() {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }

    /// `row_id` followed by one column per feature.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["row_id".to_string()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.values.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
