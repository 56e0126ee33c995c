//! Genotype datasets: TSV loading and validation, stratified k-fold and
//! holdout partitions.
//!
//! File layout is one header row followed by one row per sample:
//!
//! ```text
//! sample_id   label   rs123   rs456   ...
//! S1          1       0       2       ...
//! ```
//!
//! `label` is required; `sample_id` is optional (ids `S1..Sn` are generated
//! when it is absent). Every other column is a feature holding an additive
//! allele count in {0, 1, 2}. Feature column order is preserved.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

pub const LABEL_COLUMN: &str = "label";
pub const SAMPLE_ID_COLUMN: &str = "sample_id";

/// Samples x features matrix of allele counts with binary phenotype labels.
///
/// Genotypes are stored column-major so model fitting can scan one feature
/// at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeDataset {
    feature_ids: Vec<String>,
    sample_ids: Vec<String>,
    labels: Vec<u8>,
    genotypes: Vec<u8>,
}

impl GenotypeDataset {
    /// Builds a dataset from row-major genotypes, validating every invariant.
    pub fn from_rows(
        feature_ids: Vec<String>,
        sample_ids: Vec<String>,
        rows: &[Vec<u8>],
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = rows.len();
        let p = feature_ids.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != p) {
            return Err(Error::Dataset(format!(
                "row {} has {} genotype values, expected {}",
                i,
                row.len(),
                p
            )));
        }
        let mut genotypes = vec![0u8; n * p];
        for (i, row) in rows.iter().enumerate() {
            for (j, &g) in row.iter().enumerate() {
                genotypes[j * n + i] = g;
            }
        }
        Self::from_columns(feature_ids, sample_ids, genotypes, labels)
    }

    /// Builds a dataset from a column-major genotype buffer of length `n * p`.
    pub fn from_columns(
        feature_ids: Vec<String>,
        sample_ids: Vec<String>,
        genotypes: Vec<u8>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        let n = labels.len();
        if sample_ids.len() != n {
            return Err(Error::Dataset(format!(
                "{} sample ids for {} labels",
                sample_ids.len(),
                n
            )));
        }
        if genotypes.len() != n * feature_ids.len() {
            return Err(Error::Dataset(format!(
                "genotype buffer has {} entries, expected {} x {}",
                genotypes.len(),
                n,
                feature_ids.len()
            )));
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::Dataset(format!(
                "label of sample {} is {}, expected 0 or 1",
                sample_ids[i], labels[i]
            )));
        }
        if let Some(pos) = genotypes.iter().position(|&g| g > 2) {
            let (j, i) = (pos / n.max(1), pos % n.max(1));
            return Err(Error::Dataset(format!(
                "genotype {} at sample {} feature {} is not in {{0,1,2}}",
                genotypes[pos], sample_ids[i], feature_ids[j]
            )));
        }
        check_unique(&feature_ids, "feature")?;
        check_unique(&sample_ids, "sample")?;
        Ok(Self {
            feature_ids,
            sample_ids,
            labels,
            genotypes,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn feature_ids(&self) -> &[String] {
        &self.feature_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn column(&self, feature: usize) -> &[u8] {
        let n = self.n_samples();
        &self.genotypes[feature * n..(feature + 1) * n]
    }

    pub fn get(&self, sample: usize, feature: usize) -> u8 {
        self.genotypes[feature * self.n_samples() + sample]
    }

    pub fn feature_index(&self, id: &str) -> Option<usize> {
        self.feature_ids.iter().position(|f| f == id)
    }

    /// Resolves feature ids to column indices, failing on the first unknown id.
    pub fn feature_indices<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        let lookup: std::collections::HashMap<&str, usize> = self
            .feature_ids
            .iter()
            .enumerate()
            .map(|(i, f)| (f.as_str(), i))
            .collect();
        ids.iter()
            .map(|id| {
                lookup
                    .get(id.as_ref())
                    .copied()
                    .ok_or_else(|| Error::UnknownFeature(id.as_ref().to_string()))
            })
            .collect()
    }

    /// (controls, cases)
    pub fn class_counts(&self) -> (usize, usize) {
        let cases = self.labels.iter().filter(|&&l| l == 1).count();
        (self.n_samples() - cases, cases)
    }

    pub fn has_both_classes(&self) -> bool {
        let (controls, cases) = self.class_counts();
        controls > 0 && cases > 0
    }

    /// New dataset restricted to the given sample rows, in the given order.
    pub fn subset_samples(&self, rows: &[usize]) -> GenotypeDataset {
        let n = self.n_samples();
        let m = rows.len();
        let mut genotypes = Vec::with_capacity(m * self.n_features());
        for j in 0..self.n_features() {
            let col = &self.genotypes[j * n..(j + 1) * n];
            genotypes.extend(rows.iter().map(|&i| col[i]));
        }
        GenotypeDataset {
            feature_ids: self.feature_ids.clone(),
            sample_ids: rows.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            genotypes,
        }
    }

    /// Same samples with labels replaced; used for permutation nulls.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<GenotypeDataset> {
        Self::from_columns(
            self.feature_ids.clone(),
            self.sample_ids.clone(),
            self.genotypes.clone(),
            labels,
        )
    }

    pub fn write_tsv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = BufWriter::new(writer);
        let io = |e| Error::io("<tsv output>", e);
        write!(w, "{}\t{}", SAMPLE_ID_COLUMN, LABEL_COLUMN).map_err(io)?;
        for f in &self.feature_ids {
            write!(w, "\t{}", f).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        let mut line = String::new();
        for i in 0..self.n_samples() {
            line.clear();
            line.push_str(&self.sample_ids[i]);
            line.push('\t');
            line.push(char::from(b'0' + self.labels[i]));
            for j in 0..self.n_features() {
                line.push('\t');
                line.push(char::from(b'0' + self.get(i, j)));
            }
            writeln!(w, "{}", line).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_tsv(file)
    }
}

fn check_unique(ids: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::Dataset(format!("duplicate {} id `{}`", what, id)));
        }
    }
    Ok(())
}

/// Supported on-disk dataset formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DatasetFormat {
    #[default]
    Tsv,
}

pub fn load_dataset(path: &Path, format: DatasetFormat) -> Result<GenotypeDataset> {
    match format {
        DatasetFormat::Tsv => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_tsv(file)
        }
    }
}

pub fn read_tsv<R: Read>(reader: R) -> Result<GenotypeDataset> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io("<tsv input>", e))?,
        None => {
            return Err(Error::Dataset("empty file: missing header row".into()));
        }
    };
    let header: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    let label_col = header
        .iter()
        .position(|&h| h == LABEL_COLUMN)
        .ok_or_else(|| Error::Dataset("missing `label` column".into()))?;
    let id_col = header.iter().position(|&h| h == SAMPLE_ID_COLUMN);
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_col && Some(c) != id_col)
        .collect();
    let feature_ids: Vec<String> = feature_cols.iter().map(|&c| header[c].to_string()).collect();
    check_unique(&feature_ids, "feature")?;

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut sample_ids = Vec::new();
    for (k, line) in lines.enumerate() {
        let line_no = k + 2;
        let line = line.map_err(|e| Error::io("<tsv input>", e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::Parse {
                line: line_no,
                column: fields.len().min(header.len()) + 1,
                message: format!(
                    "ragged row: {} fields, header has {}",
                    fields.len(),
                    header.len()
                ),
            });
        }
        let label = match fields[label_col] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    column: label_col + 1,
                    message: format!("label `{}` is not 0 or 1", other),
                })
            }
        };
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let g = match fields[c] {
                "0" => 0,
                "1" => 1,
                "2" => 2,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        column: c + 1,
                        message: format!(
                            "genotype `{}` for feature `{}` is not in {{0,1,2}}",
                            other, header[c]
                        ),
                    })
                }
            };
            row.push(g);
        }
        sample_ids.push(match id_col {
            Some(c) => fields[c].to_string(),
            None => format!("S{}", rows.len() + 1),
        });
        labels.push(label);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Dataset("no samples".into()));
    }
    GenotypeDataset::from_rows(feature_ids, sample_ids, &rows, labels)
}

/// How to partition samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    Holdout { test_fraction: f64 },
    Kfold { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    #[serde(flatten)]
    pub kind: SplitKind,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

fn default_true() -> bool {
    true
}

impl SplitSpec {
    pub fn validate(&self, n_samples: usize) -> Result<()> {
        match self.kind {
            SplitKind::Holdout { test_fraction } => check_fraction(test_fraction),
            SplitKind::Kfold { k } => {
                if k < 2 || k > n_samples {
                    Err(Error::param(
                        "k",
                        format!("fold count {} must be in [2, {}]", k, n_samples),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Index partitions for this spec; a holdout split yields one fold.
    pub fn folds(&self, labels: &[u8]) -> Result<Vec<Fold>> {
        self.validate(labels.len())?;
        match self.kind {
            SplitKind::Kfold { k } => stratified_kfold_indices(labels, k, self.seed),
            SplitKind::Holdout { test_fraction } => {
                holdout_indices(labels, test_fraction, self.seed, self.stratified)
                    .map(|f| vec![f])
            }
        }
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::param(
            "test_fraction",
            format!("{} is outside the open interval (0, 1)", fraction),
        ))
    }
}

/// One train/test partition; both index lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_members(labels: &[u8]) -> [Vec<usize>; 2] {
    let mut members = [Vec::new(), Vec::new()];
    for (i, &l) in labels.iter().enumerate() {
        members[l as usize].push(i);
    }
    members
}

pub fn stratified_kfold(dataset: &GenotypeDataset, k: usize, seed: u64) -> Result<Vec<Fold>> {
    stratified_kfold_indices(dataset.labels(), k, seed)
}

/// Stratified k-fold over labels alone.
///
/// Each class is shuffled independently and dealt round-robin over the folds;
/// the dealing position carries over from the control class to the case
/// class so fold sizes differ by at most one.
pub fn stratified_kfold_indices(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::param("k", format!("fold count {} must be at least 2", k)));
    }
    let members = class_members(labels);
    for (class, m) in members.iter().enumerate() {
        if m.len() < k {
            return Err(Error::Precondition(format!(
                "class {} has {} members, fewer than k = {} folds",
                class,
                m.len(),
                k
            )));
        }
    }
    let mut rng = rng_from(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut slot = 0usize;
    for m in members {
        let mut m = m;
        m.shuffle(&mut rng);
        for i in m {
            assignment[i] = slot % k;
            slot += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

/// Sample indices for a holdout split.
///
/// With `stratified`, each class contributes `round(fraction * class_size)`
/// test samples; otherwise `round(fraction * n)` samples are drawn overall.
pub fn holdout_indices(
    labels: &[u8],
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<Fold> {
    check_fraction(test_fraction)?;
    let n = labels.len();
    let mut rng = rng_from(seed);
    let mut is_test = vec![false; n];
    if stratified {
        for mut m in class_members(labels) {
            m.shuffle(&mut rng);
            let take = (test_fraction * m.len() as f64).round() as usize;
            for &i in &m[..take] {
                is_test[i] = true;
            }
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        let take = (test_fraction * n as f64).round() as usize;
        for &i in &all[..take] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    if test.is_empty() || train.is_empty() {
        return Err(Error::Precondition(format!(
            "holdout fraction {} leaves an empty partition for {} samples",
            test_fraction, n
        )));
    }
    Ok(Fold { train, test })
}

pub fn holdout_split(
    dataset: &GenotypeDataset,
    test_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(GenotypeDataset, GenotypeDataset)> {
    let fold = holdout_indices(dataset.labels(), test_fraction, seed, stratified)?;
    Ok((
        dataset.subset_samples(&fold.train),
        dataset.subset_samples(&fold.test),
    ))
}
