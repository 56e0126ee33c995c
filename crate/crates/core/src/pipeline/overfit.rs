use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::coselnet::{build_graph, greedy_communities, CommunitySet, SelectionMatrix};
use crate::crs::{compute_crs, evaluate_crs, CrsConfig, CrsEvaluation};
use crate::dataio::{holdout_split, GenotypeDataset};
use crate::error::{Error, Result};
use crate::gasel::run_batch;
use crate::seed::{stage_seed, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitOptions {
    pub runs: usize,
    pub test_fraction: f64,
}

impl Default for OverfitOptions {
    fn default() -> Self {
        Self {
            runs: 1000,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub model: String,
    pub excluded: Vec<String>,
    pub rows: Vec<CrsEvaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverfitReport {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub communities: CommunitySet,
    pub evaluations: Vec<ModelEvaluation>,
}

/// Holdout check: select, build the network and compute risk scores on the
/// training split only, then score and test the held-out individuals.
pub fn overfit(
    data: &GenotypeDataset,
    config: &PipelineConfig,
    options: &OverfitOptions,
) -> Result<OverfitReport> {
    config.validate()?;
    let seed = config.seed;
    let (train, test) = holdout_split(data, options.test_fraction, stage_seed(seed, Stage::Split), true)?;
    if !train.has_both_classes() || !test.has_both_classes() {
        return Err(Error::Precondition(
            "both splits need cases and controls".into(),
        ));
    }
    let runs = run_batch(&train, &config.ga, options.runs, stage_seed(seed, Stage::Select))?;
    let m = SelectionMatrix::from_index_rows(
        train.feature_ids().to_vec(),
        runs.into_iter().map(|r| r.best_subset).collect(),
    )?;
    let graph = build_graph(&m, config.network.tau_occ, config.network.tau_cos)?;
    if graph.n_edges() == 0 {
        return Err(Error::Runtime(format!(
            "no edges survive tau_occ {} and tau_cos {}",
            config.network.tau_occ, config.network.tau_cos
        )));
    }
    let partition = greedy_communities(&graph)?;
    let communities = CommunitySet::from_partition(&graph, &partition);
    let crs_cfg = CrsConfig {
        seed: stage_seed(seed, Stage::Crs),
        ..config.crs.clone()
    };
    let evaluations = crs_cfg
        .model_kinds
        .iter()
        .map(|kind| {
            let out = compute_crs(&train, &test, &communities, kind, &crs_cfg)?;
            Ok(ModelEvaluation {
                model: kind.short_name().to_string(),
                excluded: out.excluded,
                rows: evaluate_crs(&out.matrix, test.labels())?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(OverfitReport {
        seed,
        n_train: train.n_samples(),
        n_test: test.n_samples(),
        communities,
        evaluations,
    })
}

impl OverfitReport {
    /// `model, community, auc, t, p` rows.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("model\tcommunity\tauc\tt\tp\n");
        for e in &self.evaluations {
            for r in &e.rows {
                s.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", e.model, r.community, r.auc, r.t, r.p));
            }
        }
        s
    }
}
