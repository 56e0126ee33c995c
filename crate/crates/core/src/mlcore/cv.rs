use serde::{Deserialize, Serialize};

use super::{auc_roc, fit, predict_proba, Matrix, ModelKind};
use crate::dataio::{stratified_kfold, Fold, GenotypeDataset};
use crate::error::{Error, Result};

/// Cross-validated AUC of a model restricted to a feature subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvFitness {
    pub mean_auc: f64,
    pub per_fold: Vec<f64>,
    /// Union over folds of the dataset columns the fold models used.
    pub used_features: Vec<usize>,
}

/// Stratified k-fold CV fitness with folds drawn from `seed`.
pub fn cv_fitness(
    dataset: &GenotypeDataset,
    feature_indices: &[usize],
    kind: &ModelKind,
    k: usize,
    seed: u64,
) -> Result<CvFitness> {
    let folds = stratified_kfold(dataset, k, seed)?;
    cv_fitness_with_folds(dataset, feature_indices, kind, &folds, seed)
}

/// CV fitness over precomputed folds. Fold `f` fits with seed `seed + f`.
pub fn cv_fitness_with_folds(
    dataset: &GenotypeDataset,
    feature_indices: &[usize],
    kind: &ModelKind,
    folds: &[Fold],
    seed: u64,
) -> Result<CvFitness> {
    if feature_indices.is_empty() {
        return Err(Error::Precondition("empty feature subset".into()));
    }
    if folds.is_empty() {
        return Err(Error::Precondition("no folds".into()));
    }
    let labels = dataset.labels();
    let mut per_fold = Vec::with_capacity(folds.len());
    let mut used = Vec::new();
    for (f, fold) in folds.iter().enumerate() {
        let x_train = Matrix::from_dataset(dataset, &fold.train, feature_indices);
        let y_train: Vec<u8> = fold.train.iter().map(|&i| labels[i]).collect();
        let model = fit(kind, &x_train, &y_train, seed.wrapping_add(f as u64))?
            .with_feature_map(feature_indices.to_vec());
        let x_test = Matrix::from_dataset(dataset, &fold.test, feature_indices);
        let y_test: Vec<u8> = fold.test.iter().map(|&i| labels[i]).collect();
        let scores = predict_proba(&model, &x_test)?;
        per_fold.push(auc_roc(&scores, &y_test)?);
        used.extend(model.used_features());
    }
    used.sort_unstable();
    used.dedup();
    let mean_auc = per_fold.iter().sum::<f64>() / per_fold.len() as f64;
    Ok(CvFitness {
        mean_auc,
        per_fold,
        used_features: used,
    })
}
