//! End-to-end orchestration shared by the `fcsnet` binary: configuration,
//! provenance sidecars, the simulation study and the holdout check.

mod config;
mod overfit;
mod provenance;
mod records;
mod sim;

pub use config::{MlConfig, NetworkConfig, PipelineConfig};
pub use overfit::{overfit, ModelEvaluation, OverfitOptions, OverfitReport};
pub use provenance::{sha256_file, sidecar_path, InputHash, Provenance};
pub use records::{feature_universe, read_subsets_jsonl, write_subsets_jsonl, SubsetRecord};
pub use sim::{
    cosine_rank, repro_sim, repro_sim_with, KindReport, Scale, SimReport, SimSettings,
    RANK_MIN_OCC,
};
