//! The fixed experiment frame and the Mahalanobis balance metric.

mod chi2;
mod context;
mod covariates;

pub use chi2::{chi2_cdf, chi2_quantile, ln_gamma, normal_quantile, regularized_gamma_p};
pub use context::{Assignment, DesignContext, SOFT_GROUP_FLOOR};
pub use covariates::{read_covariates, read_covariates_path, sample_covariance, CovariateMatrix};
