//! Community risk scores.
//!
//! For each network community, models restricted to the community's features
//! are fitted on repeated stratified subsamples of the training data and their
//! predicted case probabilities on the target individuals are averaged.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coselnet::CommunitySet;
use crate::dataio::{holdout_indices, GenotypeDataset};
use crate::error::{Error, Result};
use crate::mlcore::{auc_roc, fit, predict_proba, t_statistic, Matrix, ModelKind};

/// Offset between the seed streams of consecutive communities.
pub const COMMUNITY_SEED_STRIDE: u64 = 1_000_003;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrsConfig {
    pub n_resamples: usize,
    pub sample_fraction: f64,
    pub model_kinds: Vec<ModelKind>,
    pub min_community_size: usize,
    pub seed: u64,
}

impl Default for CrsConfig {
    fn default() -> Self {
        Self {
            n_resamples: 1000,
            sample_fraction: 0.8,
            model_kinds: vec![
                ModelKind::logistic(),
                ModelKind::decision_tree(),
                ModelKind::random_forest(),
            ],
            min_community_size: 3,
            seed: 0,
        }
    }
}

impl CrsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_resamples == 0 {
            return Err(Error::param("n_resamples", "must be at least 1"));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction < 1.0) {
            return Err(Error::param(
                "sample_fraction",
                format!("{} not in (0, 1)", self.sample_fraction),
            ));
        }
        if self.min_community_size == 0 {
            return Err(Error::param("min_community_size", "must be at least 1"));
        }
        for k in &self.model_kinds {
            k.validate()?;
        }
        Ok(())
    }

    /// Seed of resample `r` of the community at position `community`.
    pub fn resample_seed(&self, community: usize, r: usize) -> u64 {
        self.seed
            .wrapping_add(r as u64)
            .wrapping_add(COMMUNITY_SEED_STRIDE.wrapping_mul(community as u64))
    }
}

/// Individuals by communities score table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrsMatrix {
    pub sample_ids: Vec<String>,
    /// Column names, `C1`, `C2`, ...
    pub community_labels: Vec<String>,
    /// One score vector per community column.
    pub columns: Vec<Vec<f64>>,
    /// Target labels when known, written as a trailing `label` column.
    pub labels: Option<Vec<u8>>,
    /// Short model name (`lr`, `dt`, `rf`); empty when read from a file.
    pub model: String,
}

impl CrsMatrix {
    pub fn n_samples(&self) -> usize {
        self.sample_ids.len()
    }

    pub fn n_communities(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// Rows whose label is 1. Fails when labels are absent.
    pub fn cases_only(&self) -> Result<CrsMatrix> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Precondition("score table has no `label` column".into()))?;
        let keep: Vec<usize> = (0..self.n_samples()).filter(|&i| labels[i] == 1).collect();
        Ok(CrsMatrix {
            sample_ids: keep.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            community_labels: self.community_labels.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| keep.iter().map(|&i| c[i]).collect())
                .collect(),
            labels: Some(vec![1; keep.len()]),
            model: self.model.clone(),
        })
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "sample_id")?;
        for l in &self.community_labels {
            write!(w, "\t{}", l)?;
        }
        if self.labels.is_some() {
            write!(w, "\tlabel")?;
        }
        writeln!(w)?;
        for i in 0..self.n_samples() {
            write!(w, "{}", self.sample_ids[i])?;
            for c in &self.columns {
                write!(w, "\t{}", c[i])?;
            }
            if let Some(labels) = &self.labels {
                write!(w, "\t{}", labels[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_tsv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv<R: Read>(reader: R) -> Result<CrsMatrix> {
        let mut lines = BufReader::new(reader).lines();
        let header = match lines.next() {
            Some(l) => l.map_err(|e| Error::io("<score table>", e))?,
            None => return Err(Error::Dataset("empty score table".into())),
        };
        let names: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        if names.first() != Some(&"sample_id") {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "first column must be `sample_id`".into(),
            });
        }
        let label_col = names.iter().position(|&n| n == "label");
        let score_cols: Vec<usize> = (1..names.len()).filter(|&j| Some(j) != label_col).collect();
        if score_cols.is_empty() {
            return Err(Error::Dataset("score table has no community columns".into()));
        }
        let mut out = CrsMatrix {
            sample_ids: Vec::new(),
            community_labels: score_cols.iter().map(|&j| names[j].to_string()).collect(),
            columns: vec![Vec::new(); score_cols.len()],
            labels: label_col.map(|_| Vec::new()),
            model: String::new(),
        };
        for (ln, line) in lines.enumerate() {
            let line_no = ln + 2;
            let line = line.map_err(|e| Error::io("<score table>", e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != names.len() {
                return Err(Error::Parse {
                    line: line_no,
                    column: fields.len().min(names.len()) + 1,
                    message: format!("expected {} fields, found {}", names.len(), fields.len()),
                });
            }
            out.sample_ids.push(fields[0].to_string());
            for (k, &j) in score_cols.iter().enumerate() {
                let v: f64 = fields[j].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    column: j + 1,
                    message: format!("`{}` is not a number", fields[j]),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Parse {
                        line: line_no,
                        column: j + 1,
                        message: format!("score {} outside [0, 1]", v),
                    });
                }
                out.columns[k].push(v);
            }
            if let (Some(j), Some(labels)) = (label_col, out.labels.as_mut()) {
                labels.push(match fields[j] {
                    "0" => 0,
                    "1" => 1,
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            column: j + 1,
                            message: format!("label `{}` is not 0 or 1", other),
                        })
                    }
                });
            }
        }
        if out.sample_ids.is_empty() {
            return Err(Error::Dataset("score table has no rows".into()));
        }
        Ok(out)
    }

    pub fn load_tsv(path: &Path) -> Result<CrsMatrix> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_tsv(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrsOutput {
    pub matrix: CrsMatrix,
    /// Labels of communities skipped for having fewer than
    /// `min_community_size` features.
    pub excluded: Vec<String>,
}

pub fn compute_crs(
    train: &GenotypeDataset,
    target: &GenotypeDataset,
    communities: &CommunitySet,
    kind: &ModelKind,
    config: &CrsConfig,
) -> Result<CrsOutput> {
    compute_crs_with(train, target, communities, kind, config, |c, r| {
        config.resample_seed(c, r)
    })
}

/// [`compute_crs`] with a caller-supplied `(community_position, resample)`
/// seed function.
pub fn compute_crs_with<F>(
    train: &GenotypeDataset,
    target: &GenotypeDataset,
    communities: &CommunitySet,
    kind: &ModelKind,
    config: &CrsConfig,
    seed_of: F,
) -> Result<CrsOutput>
where
    F: Fn(usize, usize) -> u64 + Sync,
{
    config.validate()?;
    kind.validate()?;
    if communities.communities.is_empty() {
        return Err(Error::Precondition("no communities".into()));
    }
    if !train.has_both_classes() {
        return Err(Error::Precondition(
            "training data must contain cases and controls".into(),
        ));
    }
    let mut excluded = Vec::new();
    let mut kept = Vec::new();
    for (pos, c) in communities.communities.iter().enumerate() {
        if c.feature_ids.len() < config.min_community_size {
            excluded.push(c.label.clone());
        } else {
            kept.push((pos, c));
        }
    }
    if kept.is_empty() {
        return Err(Error::Precondition(format!(
            "no community has at least {} features",
            config.min_community_size
        )));
    }
    let labels = train.labels();
    let all_target: Vec<usize> = (0..target.n_samples()).collect();
    let mut columns = Vec::with_capacity(kept.len());
    for &(pos, c) in &kept {
        let train_cols = train.feature_indices(&c.feature_ids)?;
        let target_cols = target.feature_indices(&c.feature_ids)?;
        let x_target = Matrix::from_dataset(target, &all_target, &target_cols);
        let predictions: Vec<Vec<f64>> = (0..config.n_resamples)
            .into_par_iter()
            .map(|r| {
                let seed = seed_of(pos, r);
                let rows = holdout_indices(labels, config.sample_fraction, seed, true)?.test;
                let x = Matrix::from_dataset(train, &rows, &train_cols);
                let y: Vec<u8> = rows.iter().map(|&i| labels[i]).collect();
                let model = fit(kind, &x, &y, seed)?;
                predict_proba(&model, &x_target)
            })
            .collect::<Result<_>>()?;
        let mut sum = vec![0.0; target.n_samples()];
        for p in &predictions {
            for (s, v) in sum.iter_mut().zip(p) {
                *s += v;
            }
        }
        let n = config.n_resamples as f64;
        columns.push(sum.into_iter().map(|s| (s / n).clamp(0.0, 1.0)).collect());
    }
    if !excluded.is_empty() {
        log::info!("skipped small communities: {}", excluded.join(", "));
    }
    Ok(CrsOutput {
        matrix: CrsMatrix {
            sample_ids: target.sample_ids().to_vec(),
            community_labels: kept.iter().map(|(_, c)| c.label.clone()).collect(),
            columns,
            labels: Some(target.labels().to_vec()),
            model: kind.short_name().to_string(),
        },
        excluded,
    })
}

/// Per-individual maximum over community scores.
pub fn max_crs(matrix: &CrsMatrix) -> Result<Vec<f64>> {
    if matrix.columns.is_empty() {
        return Err(Error::Precondition("no community columns".into()));
    }
    Ok((0..matrix.n_samples())
        .map(|i| {
            matrix
                .columns
                .iter()
                .map(|c| c[i])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrsEvaluation {
    pub community: String,
    pub auc: f64,
    pub t: f64,
    pub p: f64,
}

/// AUC and case-vs-control Welch t-test per column, then for the row maximum
/// (reported as `Max`).
pub fn evaluate_crs(matrix: &CrsMatrix, labels: &[u8]) -> Result<Vec<CrsEvaluation>> {
    if labels.len() != matrix.n_samples() {
        return Err(Error::Shape {
            expected: matrix.n_samples(),
            actual: labels.len(),
        });
    }
    let max = max_crs(matrix)?;
    let named = matrix
        .community_labels
        .iter()
        .map(String::as_str)
        .zip(matrix.columns.iter().map(Vec::as_slice))
        .chain(std::iter::once(("Max", max.as_slice())));
    named
        .map(|(name, scores)| {
            let auc = auc_roc(scores, labels)?;
            let (mut cases, mut controls) = (Vec::new(), Vec::new());
            for (&s, &l) in scores.iter().zip(labels) {
                if l == 1 {
                    cases.push(s);
                } else {
                    controls.push(s);
                }
            }
            let tt = t_statistic(&cases, &controls)?;
            Ok(CrsEvaluation {
                community: name.to_string(),
                auc,
                t: tt.t,
                p: tt.p,
            })
        })
        .collect()
}

pub fn write_evaluation_tsv<W: Write>(rows: &[CrsEvaluation], mut w: W) -> std::io::Result<()> {
    writeln!(w, "community\tauc\tt\tp")?;
    for r in rows {
        writeln!(w, "{}\t{}\t{}\t{}", r.community, r.auc, r.t, r.p)?;
    }
    Ok(())
}
