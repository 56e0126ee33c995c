//! Feature co-selection networks for case-control genotype data.
//!
//! Pipeline stages, each usable on its own:
//!
//! * [`dataio`]: TSV genotype datasets, stratified folds and holdout splits.
//! * [`synthgen`]: two-locus pure-epistasis case-control simulator.
//! * [`mlcore`]: logistic regression, CART, random forest, AUC, Welch t-test.
//! * [`gasel`]: GA wrapper feature selection and batch runs.
//! * [`coselnet`]: selection matrix, co-selection counts and cosine,
//!   thresholded network, greedy modularity communities.
//! * [`crs`]: community risk scores from resampled per-community models.
//! * [`subtype`]: Ward clustering of individuals in CRS space.
//! * [`pipeline`]: configuration, provenance, and the simulation and
//!   overfitting studies driven by the `fcsnet` binary.

pub mod coselnet;
pub mod crs;
pub mod dataio;
pub mod error;
pub mod gasel;
pub mod mlcore;
pub mod pipeline;
pub mod seed;
pub mod subtype;
pub mod synthgen;

pub use error::{Error, Result};
