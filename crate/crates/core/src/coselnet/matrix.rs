use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 0/1 matrix of evolved subsets: one row per subset, one column per feature.
///
/// Rows are stored as sorted column-index lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMatrix {
    feature_ids: Vec<String>,
    rows: Vec<Vec<usize>>,
}

impl SelectionMatrix {
    pub fn from_index_rows(feature_ids: Vec<String>, rows: Vec<Vec<usize>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Precondition("empty subset collection".into()));
        }
        let p = feature_ids.len();
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.dedup();
                match r.last() {
                    Some(&j) if j >= p => Err(Error::Precondition(format!(
                        "column {} outside {} features",
                        j, p
                    ))),
                    _ => Ok(r),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { feature_ids, rows })
    }

    /// Dense 0/1 rows; mainly for tests and small fixtures.
    pub fn from_dense(feature_ids: Vec<String>, dense: &[Vec<u8>]) -> Result<Self> {
        let rows = dense
            .iter()
            .map(|r| {
                if r.len() != feature_ids.len() {
                    return Err(Error::Shape {
                        expected: feature_ids.len(),
                        actual: r.len(),
                    });
                }
                Ok(r.iter().enumerate().filter(|(_, &v)| v != 0).map(|(j, _)| j).collect())
            })
            .collect::<Result<Vec<Vec<usize>>>>()?;
        Self::from_index_rows(feature_ids, rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        u8::from(self.rows[i].binary_search(&j).is_ok())
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        (0..self.n_rows())
            .map(|i| (0..self.n_cols()).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Selection frequency of each feature.
    pub fn column_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.n_cols()];
        for r in &self.rows {
            for &j in r {
                sums[j] += 1;
            }
        }
        sums
    }
}

/// Encodes each subset (given as feature ids) as a row of the selection
/// matrix over `feature_ids`.
pub fn build_selection_matrix<S: AsRef<str>>(
    gamma: &[Vec<S>],
    feature_ids: &[String],
) -> Result<SelectionMatrix> {
    if gamma.is_empty() {
        return Err(Error::Precondition("empty subset collection".into()));
    }
    let lookup: HashMap<&str, usize> = feature_ids
        .iter()
        .enumerate()
        .map(|(j, f)| (f.as_str(), j))
        .collect();
    let rows = gamma
        .iter()
        .map(|subset| {
            subset
                .iter()
                .map(|id| {
                    lookup
                        .get(id.as_ref())
                        .copied()
                        .ok_or_else(|| Error::UnknownFeature(id.as_ref().to_string()))
                })
                .collect::<Result<Vec<usize>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    SelectionMatrix::from_index_rows(feature_ids.to_vec(), rows)
}

/// Co-selection counts `A = M^T M`, stored sparsely.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoSelectionCounts {
    diag: Vec<u64>,
    /// Pairs `(i, j)` with `i < j` and a non-zero count, sorted.
    pairs: Vec<((usize, usize), u64)>,
}

impl CoSelectionCounts {
    pub fn n_features(&self) -> usize {
        self.diag.len()
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        if i == j {
            return self.diag[i];
        }
        let key = (i.min(j), i.max(j));
        self.pairs
            .binary_search_by(|(k, _)| k.cmp(&key))
            .map_or(0, |pos| self.pairs[pos].1)
    }

    pub fn diag(&self) -> &[u64] {
        &self.diag
    }

    /// Non-zero off-diagonal entries with `i < j`, in sorted order.
    pub fn pairs(&self) -> &[((usize, usize), u64)] {
        &self.pairs
    }

    /// `A_ij / sqrt(A_ii A_jj)`; 0 when either feature was never selected.
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        let (di, dj) = (self.diag[i], self.diag[j]);
        if di == 0 || dj == 0 {
            return 0.0;
        }
        if i == j {
            return 1.0;
        }
        self.get(i, j) as f64 / ((di as f64) * (dj as f64)).sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<u64>> {
        let p = self.n_features();
        let mut a = vec![vec![0u64; p]; p];
        for (j, &d) in self.diag.iter().enumerate() {
            a[j][j] = d;
        }
        for &((i, j), c) in &self.pairs {
            a[i][j] = c;
            a[j][i] = c;
        }
        a
    }
}

pub fn coselection_counts(m: &SelectionMatrix) -> CoSelectionCounts {
    let mut acc: HashMap<(usize, usize), u64> = HashMap::new();
    for r in &m.rows {
        for (k, &i) in r.iter().enumerate() {
            for &j in &r[k + 1..] {
                *acc.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<((usize, usize), u64)> = acc.into_iter().collect();
    pairs.sort_unstable();
    CoSelectionCounts {
        diag: m.column_sums(),
        pairs,
    }
}

/// Dense cosine-similarity matrix between the columns of `m`.
pub fn cosine_matrix(m: &SelectionMatrix) -> Vec<Vec<f64>> {
    let counts = coselection_counts(m);
    let p = m.n_cols();
    (0..p)
        .map(|i| (0..p).map(|j| counts.cosine(i, j)).collect())
        .collect()
}
