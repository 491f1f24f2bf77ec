use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::balance::{Assignment, CovariateMatrix};
use crate::error::{Error, Result};
use crate::inference::OutcomeVector;

/// Linear outcome model `Y_i = beta0 + beta' X_i + tau Z_i + eps_i` with
/// `eps_i ~ N(0, noise_sd^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModel {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub tau: f64,
    pub noise_sd: f64,
}

impl OutcomeModel {
    /// Zero intercept, all-ones slopes.
    pub fn ones(d: usize, tau: f64, noise_sd: f64) -> Self {
        Self {
            beta0: 0.0,
            beta: vec![1.0; d],
            tau,
            noise_sd,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.beta0.is_finite()
            && self.tau.is_finite()
            && self.beta.iter().all(|b| b.is_finite());
        if !finite || !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::InvalidInput(
                "outcome model needs finite coefficients and noise_sd > 0".into(),
            ));
        }
        Ok(())
    }

    /// `beta' S beta` for a covariance `S`.
    pub fn explained_variance(&self, cov: &DMatrix<f64>) -> f64 {
        let b = nalgebra::DVector::from_column_slice(&self.beta);
        b.dot(&(cov * &b))
    }
}

/// `n x d` matrix of independent standard normals (ziggurat sampler),
/// drawn unit by unit.
pub fn generate_covariates<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<CovariateMatrix> {
    let mut values = DMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            values[(i, j)] = rng.sample(StandardNormal);
        }
    }
    CovariateMatrix::new(values)
}

pub fn generate_outcomes<R: Rng + ?Sized>(
    x: &CovariateMatrix,
    z: &Assignment,
    model: &OutcomeModel,
    rng: &mut R,
) -> Result<OutcomeVector> {
    model.validate()?;
    if model.beta.len() != x.d() || z.len() != x.n() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: X is {}x{}, beta has {}, assignment has {}",
            x.n(),
            x.d(),
            model.beta.len(),
            z.len()
        )));
    }
    let beta = nalgebra::DVector::from_column_slice(&model.beta);
    let signal = x.values() * beta;
    let y = (0..x.n())
        .map(|i| {
            let eps: f64 = rng.sample(StandardNormal);
            let treat = if z.is_treated(i) { model.tau } else { 0.0 };
            model.beta0 + signal[i] + treat + model.noise_sd * eps
        })
        .collect();
    OutcomeVector::new(y)
}
