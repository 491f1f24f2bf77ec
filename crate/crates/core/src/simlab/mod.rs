//! Seeded Monte Carlo studies: timing, estimation, inference and LGR
//! hyperparameter sensitivity.
//!
//! Each replication draws a fresh covariate matrix, so a cell summarizes the
//! sampler over the data-generating process rather than over one fixed
//! design. Replication `r` of method `m` at dimension `d` uses streams
//! derived from `(master_seed, m, d, r)`.

mod bootstrap;
mod config;
mod dgp;
mod report;
mod studies;

pub use bootstrap::bootstrap_ci;
pub use config::StudyConfig;
pub use dgp::{generate_covariates, generate_outcomes, OutcomeModel};
pub use report::{CellReport, ExperimentReport, CSV_COLUMNS};
pub use studies::{run_estimation_study, run_inference_study, run_timing_study, sensitivity_sweep};
