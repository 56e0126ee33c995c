use crate::dataio::GenotypeDataset;
use crate::error::{Error, Result};

/// Dense column-major matrix of model inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_columns(n_rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n_cols = columns.len();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (j, c) in columns.into_iter().enumerate() {
            if c.len() != n_rows {
                return Err(Error::Dataset(format!(
                    "column {} has {} rows, expected {}",
                    j,
                    c.len(),
                    n_rows
                )));
            }
            data.extend(c);
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Dataset("ragged rows".into()));
        }
        let mut data = vec![0.0; n_rows * n_cols];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                data[j * n_rows + i] = v;
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    /// Gathers `rows` x `cols` of a genotype dataset as additive codes.
    pub fn from_dataset(dataset: &GenotypeDataset, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &j in cols {
            let col = dataset.column(j);
            data.extend(rows.iter().map(|&i| f64::from(col[i])));
        }
        Self {
            n_rows: rows.len(),
            n_cols: cols.len(),
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_rows + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.n_cols).map(|j| self.get(i, j)).collect()
    }

    pub fn has_nan(&self) -> bool {
        self.data.iter().any(|v| v.is_nan())
    }
}
