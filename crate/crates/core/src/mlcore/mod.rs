//! Predictive models used as GA fitness functions and CRS generators.

pub mod cv;
pub mod logistic;
pub mod matrix;
pub mod metrics;
pub mod tree;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_from;

pub use cv::{cv_fitness, cv_fitness_with_folds, CvFitness};
pub use logistic::{LogisticModel, LogisticParams};
pub use matrix::Matrix;
pub use metrics::{auc_roc, t_statistic, TTest};
pub use tree::{DecisionTree, Node, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    #[default]
    Sqrt,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub feature_subsample: FeatureSubsample,
    /// Train each tree on a bootstrap resample of the rows.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            tree: TreeParams::default(),
            feature_subsample: FeatureSubsample::Sqrt,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    LogisticRegression(LogisticParams),
    DecisionTree(TreeParams),
    RandomForest(ForestParams),
}

impl ModelKind {
    pub fn logistic() -> Self {
        ModelKind::LogisticRegression(LogisticParams::default())
    }

    pub fn decision_tree() -> Self {
        ModelKind::DecisionTree(TreeParams::default())
    }

    pub fn random_forest() -> Self {
        ModelKind::RandomForest(ForestParams::default())
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            ModelKind::LogisticRegression(_) => "lr",
            ModelKind::DecisionTree(_) => "dt",
            ModelKind::RandomForest(_) => "rf",
        }
    }

    pub fn is_tree_based(&self) -> bool {
        !matches!(self, ModelKind::LogisticRegression(_))
    }

    pub fn validate(&self) -> Result<()> {
        let tree_ok = |t: &TreeParams| {
            if t.min_samples_leaf == 0 {
                Err(Error::param("min_samples_leaf", "must be at least 1"))
            } else {
                Ok(())
            }
        };
        match self {
            ModelKind::LogisticRegression(p) => {
                if !(p.l2_penalty >= 0.0) {
                    return Err(Error::param("l2_penalty", "must be non-negative"));
                }
                if p.max_iterations == 0 {
                    return Err(Error::param("max_iterations", "must be at least 1"));
                }
                if !(p.convergence_tol > 0.0) {
                    return Err(Error::param("convergence_tol", "must be positive"));
                }
                Ok(())
            }
            ModelKind::DecisionTree(t) => tree_ok(t),
            ModelKind::RandomForest(f) => {
                if f.n_trees == 0 {
                    return Err(Error::param("n_trees", "must be at least 1"));
                }
                tree_ok(&f.tree)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    /// Constant predictor used when training labels hold a single class.
    Prior(f64),
    Logistic(LogisticModel),
    Tree(DecisionTree),
    Forest(Vec<DecisionTree>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub kind: ModelKind,
    pub params: ModelParams,
    /// Dataset column behind each model input column.
    pub feature_index_map: Vec<usize>,
    /// Set when training fell back to the prior predictor.
    pub degenerate: bool,
}

impl FittedModel {
    pub fn with_feature_map(mut self, map: Vec<usize>) -> Self {
        debug_assert_eq!(map.len(), self.feature_index_map.len());
        self.feature_index_map = map;
        self
    }

    pub fn n_inputs(&self) -> usize {
        self.feature_index_map.len()
    }

    /// Dataset columns the model actually consults, sorted.
    ///
    /// Logistic regression uses every input; trees and forests only the
    /// features that appear in some split.
    pub fn used_features(&self) -> Vec<usize> {
        let local: Vec<usize> = match &self.params {
            ModelParams::Prior(_) => Vec::new(),
            ModelParams::Logistic(_) => (0..self.n_inputs()).collect(),
            ModelParams::Tree(t) => t.used_features(),
            ModelParams::Forest(trees) => {
                let mut all: Vec<usize> = trees.iter().flat_map(|t| t.used_features()).collect();
                all.sort_unstable();
                all.dedup();
                all
            }
        };
        let mut mapped: Vec<usize> = local.into_iter().map(|j| self.feature_index_map[j]).collect();
        mapped.sort_unstable();
        mapped
    }
}

/// Fits `kind` on `x` (rows = samples) and binary labels `y`.
///
/// Single-class labels produce a flagged prior predictor instead of an error.
pub fn fit(kind: &ModelKind, x: &Matrix, y: &[u8], seed: u64) -> Result<FittedModel> {
    kind.validate()?;
    if x.n_rows() == 0 || x.n_cols() == 0 {
        return Err(Error::Precondition(format!(
            "cannot fit on an empty {}x{} matrix",
            x.n_rows(),
            x.n_cols()
        )));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Shape {
            expected: x.n_rows(),
            actual: y.len(),
        });
    }
    if x.has_nan() {
        return Err(Error::Precondition("NaN in model input".into()));
    }
    let cases = y.iter().filter(|&&v| v == 1).count();
    let map: Vec<usize> = (0..x.n_cols()).collect();
    if cases == 0 || cases == y.len() {
        log::debug!("single-class training labels; using prior predictor");
        return Ok(FittedModel {
            kind: *kind,
            params: ModelParams::Prior(cases as f64 / y.len() as f64),
            feature_index_map: map,
            degenerate: true,
        });
    }
    let params = match kind {
        ModelKind::LogisticRegression(p) => ModelParams::Logistic(logistic::fit(x, y, p)),
        ModelKind::DecisionTree(p) => ModelParams::Tree(tree::fit(x, y, p)),
        ModelKind::RandomForest(p) => ModelParams::Forest(fit_forest(x, y, p, seed)),
    };
    Ok(FittedModel {
        kind: *kind,
        params,
        feature_index_map: map,
        degenerate: false,
    })
}

fn fit_forest(x: &Matrix, y: &[u8], params: &ForestParams, seed: u64) -> Vec<DecisionTree> {
    let mut rng = rng_from(seed);
    let n = x.n_rows();
    let p = x.n_cols();
    let mtry = match params.feature_subsample {
        FeatureSubsample::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
        FeatureSubsample::All => p,
    };
    (0..params.n_trees)
        .map(|_| {
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let sampler = tree::FeatureSampler {
                rng: &mut rng,
                mtry,
            };
            tree::fit_rows(x, y, rows, &params.tree, Some(sampler))
        })
        .collect()
}

/// Probability of the case class for every row of `x`.
pub fn predict_proba(model: &FittedModel, x: &Matrix) -> Result<Vec<f64>> {
    if x.n_cols() != model.n_inputs() {
        return Err(Error::Shape {
            expected: model.n_inputs(),
            actual: x.n_cols(),
        });
    }
    let rows = 0..x.n_rows();
    Ok(match &model.params {
        ModelParams::Prior(p) => vec![*p; x.n_rows()],
        ModelParams::Logistic(m) => rows.map(|i| logistic::sigmoid(m.score(x, i))).collect(),
        ModelParams::Tree(t) => rows.map(|i| t.predict_row(x, i)).collect(),
        ModelParams::Forest(trees) => rows
            .map(|i| trees.iter().map(|t| t.predict_row(x, i)).sum::<f64>() / trees.len() as f64)
            .collect(),
    })
}

/// Shuffled copy of `labels`; used to build permutation-null fixtures.
pub fn permuted_labels(labels: &[u8], seed: u64) -> Vec<u8> {
    let mut out = labels.to_vec();
    out.shuffle(&mut rng_from(seed));
    out
}
