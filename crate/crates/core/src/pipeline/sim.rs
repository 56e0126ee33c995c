use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::coselnet::{coselection_counts, SelectionMatrix};
use crate::error::{Error, Result};
use crate::gasel::{run_batch, GAConfig};
use crate::mlcore::ModelKind;
use crate::seed::{stage_seed, Stage};
use crate::synthgen::{generate, make_xor_model, SynthConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 100 features, 800 samples, 200 runs per fitness kind, reduced GA.
    Desk,
    /// 1,000 features, 1,600 samples, 1,000 runs, full simulation settings.
    Paper,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "paper" => Ok(Scale::Paper),
            other => Err(Error::param("scale", format!("`{}` is not desk or paper", other))),
        }
    }
}

/// Full settings of one simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub heritability: f64,
    pub maf: f64,
    pub n_cases: usize,
    pub n_controls: usize,
    pub n_features: usize,
    pub noise_maf_range: (f64, f64),
    pub runs: usize,
    pub ga: GAConfig,
}

impl SimSettings {
    pub fn for_scale(scale: Scale) -> Self {
        let base = GAConfig::simulation(ModelKind::decision_tree());
        match scale {
            Scale::Desk => Self {
                heritability: 0.4,
                maf: 0.5,
                n_cases: 400,
                n_controls: 400,
                n_features: 100,
                noise_maf_range: (0.05, 0.5),
                runs: 200,
                ga: GAConfig {
                    pop_size: 100,
                    ngen: 30,
                    ..base
                },
            },
            Scale::Paper => Self {
                heritability: 0.4,
                maf: 0.5,
                n_cases: 800,
                n_controls: 800,
                n_features: 1000,
                noise_maf_range: (0.05, 0.5),
                runs: 1000,
                ga: base,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindReport {
    pub fitness: String,
    pub runs: usize,
    /// Runs whose best subset holds both functional features.
    pub pair_occurrence: u64,
    pub pair_occurrence_fraction: f64,
    pub pair_cosine: f64,
    /// 1-based rank of the functional pair by cosine among pairs co-selected
    /// at least twice; `None` when the pair itself falls below that.
    pub pair_cosine_rank: Option<usize>,
    pub pairs_ranked: usize,
    pub mean_best_fitness: f64,
    /// `(feature id, selection count)` for every feature, in column order.
    pub selection_counts: Vec<(String, u64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub seed: u64,
    pub scale: Scale,
    pub settings: SimSettings,
    pub functional_features: [String; 2],
    pub kinds: Vec<KindReport>,
}

/// Minimum co-occurrence for a pair to enter the cosine ranking.
pub const RANK_MIN_OCC: u64 = 2;

/// Rank of pair `(a, b)` by cosine among pairs with at least `min_occ`
/// co-selections: one plus the number of strictly better pairs.
pub fn cosine_rank(m: &SelectionMatrix, a: usize, b: usize, min_occ: u64) -> (Option<usize>, usize) {
    let counts = coselection_counts(m);
    let eligible: Vec<f64> = counts
        .pairs()
        .iter()
        .filter(|&&(_, occ)| occ >= min_occ)
        .map(|&((i, j), _)| counts.cosine(i, j))
        .collect();
    if counts.get(a, b) < min_occ {
        return (None, eligible.len());
    }
    let target = counts.cosine(a, b);
    let better = eligible.iter().filter(|&&c| c > target).count();
    (Some(better + 1), eligible.len())
}

/// Runs the simulation study with both fitness kinds on one generated dataset.
pub fn repro_sim_with(seed: u64, scale: Scale, settings: &SimSettings) -> Result<SimReport> {
    let model = make_xor_model(settings.heritability, settings.maf)?;
    if settings.n_features < 2 {
        return Err(Error::param("n_features", "must be at least 2"));
    }
    let synth = generate(
        &model,
        &SynthConfig {
            n_cases: settings.n_cases,
            n_controls: settings.n_controls,
            n_noise_features: settings.n_features - 2,
            noise_maf_range: settings.noise_maf_range,
            seed: stage_seed(seed, Stage::Synth),
            functional_positions: None,
        },
    )?;
    let data = &synth.dataset;
    let (fa, fb) = synth.functional_positions;
    let select_seed = stage_seed(seed, Stage::Select);
    let mut kinds = Vec::new();
    for kind in [ModelKind::decision_tree(), ModelKind::logistic()] {
        let cfg = GAConfig {
            fitness_kind: kind,
            ..settings.ga
        };
        log::info!("repro-sim: {} runs with {} fitness", settings.runs, kind.short_name());
        let results = run_batch(data, &cfg, settings.runs, select_seed)?;
        let m = SelectionMatrix::from_index_rows(
            data.feature_ids().to_vec(),
            results.iter().map(|r| r.best_subset.clone()).collect(),
        )?;
        let counts = coselection_counts(&m);
        let (rank, pairs_ranked) = cosine_rank(&m, fa, fb, RANK_MIN_OCC);
        let occ = counts.get(fa, fb);
        kinds.push(KindReport {
            fitness: kind.short_name().to_string(),
            runs: settings.runs,
            pair_occurrence: occ,
            pair_occurrence_fraction: occ as f64 / settings.runs as f64,
            pair_cosine: counts.cosine(fa, fb),
            pair_cosine_rank: rank,
            pairs_ranked,
            mean_best_fitness: results.iter().map(|r| r.best_fitness).sum::<f64>()
                / results.len() as f64,
            selection_counts: data
                .feature_ids()
                .iter()
                .cloned()
                .zip(counts.diag().iter().copied())
                .collect(),
        });
    }
    let (ia, ib) = synth.functional_ids();
    Ok(SimReport {
        seed,
        scale,
        settings: settings.clone(),
        functional_features: [ia, ib],
        kinds,
    })
}

pub fn repro_sim(seed: u64, scale: Scale) -> Result<SimReport> {
    repro_sim_with(seed, scale, &SimSettings::for_scale(scale))
}

impl SimReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let st = &self.settings;
        let _ = writeln!(
            s,
            "simulation study, seed {}, {} features x {} samples, h2 {}",
            self.seed,
            st.n_features,
            st.n_cases + st.n_controls,
            st.heritability
        );
        let _ = writeln!(
            s,
            "functional pair: {} {}",
            self.functional_features[0], self.functional_features[1]
        );
        for k in &self.kinds {
            let rank = k
                .pair_cosine_rank
                .map_or_else(|| "unranked".to_string(), |r| format!("#{} of {}", r, k.pairs_ranked));
            let _ = writeln!(
                s,
                "{}: co-occurrence {}/{} ({:.1}%), cosine {:.3}, rank {}, mean best fitness {:.4}",
                k.fitness,
                k.pair_occurrence,
                k.runs,
                100.0 * k.pair_occurrence_fraction,
                k.pair_cosine,
                rank,
                k.mean_best_fitness
            );
        }
        s
    }
}
