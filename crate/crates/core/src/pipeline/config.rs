use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crs::CrsConfig;
use crate::error::{Error, Result};
use crate::gasel::GAConfig;
use crate::mlcore::{ForestParams, LogisticParams, ModelKind, TreeParams};

/// Hyperparameters used whenever a model is chosen by short name.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct MlConfig {
    pub logistic: LogisticParams,
    pub tree: TreeParams,
    pub forest: ForestParams,
}

impl MlConfig {
    /// `lr`, `dt` or `rf` with the configured hyperparameters.
    pub fn kind(&self, short: &str) -> Result<ModelKind> {
        match short {
            "lr" => Ok(ModelKind::LogisticRegression(self.logistic)),
            "dt" => Ok(ModelKind::DecisionTree(self.tree)),
            "rf" => Ok(ModelKind::RandomForest(self.forest)),
            other => Err(Error::param(
                "model",
                format!("`{}` is not one of lr, dt, rf", other),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub tau_occ: u64,
    pub tau_cos: f64,
    /// Sweep grids, e.g. `"1..10"` and `"0.00..0.20:0.01"`.
    pub occ_grid: Option<String>,
    pub cos_grid: Option<String>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            tau_occ: 5,
            tau_cos: 0.09,
            occ_grid: None,
            cos_grid: None,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_occ < 1 {
            return Err(Error::param("tau_occ", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.tau_cos) {
            return Err(Error::param("tau_cos", format!("{} not in [0, 1]", self.tau_cos)));
        }
        if let Some(g) = &self.occ_grid {
            crate::coselnet::parse_occ_grid(g)?;
        }
        if let Some(g) = &self.cos_grid {
            crate::coselnet::parse_cos_grid(g)?;
        }
        Ok(())
    }
}

/// Shared configuration file. Every section and field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub ga: GAConfig,
    pub ml: MlConfig,
    pub network: NetworkConfig,
    pub crs: CrsConfig,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.ga.validate()?;
        self.ml.validate()?;
        self.network.validate()?;
        self.crs.validate()
    }

    /// SHA-256 of the effective configuration in its canonical JSON form.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

impl MlConfig {
    pub fn validate(&self) -> Result<()> {
        for k in ["lr", "dt", "rf"] {
            self.kind(k)?.validate()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = PipelineConfig::from_json("{}").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.ga.pop_size, 200);
        assert_eq!(c.crs.n_resamples, 1000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(PipelineConfig::from_json(r#"{"sed": 1}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"ga": {"popsize": 1}}"#).is_err());
    }

    #[test]
    fn constraints_checked_at_parse_time() {
        assert!(PipelineConfig::from_json(r#"{"ga": {"cxpb": 1.5}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"crs": {"sample_fraction": 0}}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"network": {"tau_occ": 0}}"#).is_err());
        let c = PipelineConfig::from_json(
            r#"{"seed": 7, "ga": {"fitness_kind": {"kind": "logistic_regression"}}}"#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert!(!c.ga.fitness_kind.is_tree_based());
    }

    #[test]
    fn hash_tracks_content() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        b.seed = 1;
        assert_ne!(a.sha256(), b.sha256());
    }
}
