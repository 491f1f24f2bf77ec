//! Langevin-gradient rerandomization.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::kernels::{grad_soft_into, project_top_n1, soft_assignment_into};
use super::BalanceDraw;
use crate::balance::DesignContext;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LgrConfig {
    /// Sigmoid temperature; also scales the Langevin noise.
    pub delta: f64,
    /// Learning rate.
    pub eta: f64,
    /// Maximum number of Langevin updates per call.
    pub max_iters: u64,
}

impl Default for LgrConfig {
    fn default() -> Self {
        Self {
            delta: 0.5,
            eta: 1.0,
            max_iters: 100_000,
        }
    }
}

impl LgrConfig {
    pub fn new(delta: f64, eta: f64, max_iters: u64) -> Result<Self> {
        let cfg = Self {
            delta,
            eta,
            max_iters,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidInput(format!("eta must be positive, got {}", self.eta)));
        }
        Ok(())
    }
}

/// Draws a balanced assignment by stochastic gradient Langevin dynamics on
/// latent scores.
///
/// Each pass projects the scores onto the `n1` largest, returns if that
/// assignment has `M <= a`, and otherwise takes the step
/// `theta <- theta - eta * grad + sqrt(2 eta delta) * xi` with `xi ~ N(0, I)`.
/// The scores start at `N(0, I)`. `iterations` is the number of updates
/// taken before acceptance.
pub fn sample_lgr<R: Rng + ?Sized>(
    ctx: &DesignContext,
    cfg: &LgrConfig,
    rng: &mut R,
) -> Result<BalanceDraw> {
    cfg.validate()?;
    let start = Instant::now();
    let n = ctx.n();
    let a = ctx.threshold_a();
    let noise_scale = (2.0 * cfg.eta * cfg.delta).sqrt();

    let mut theta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut ztilde = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut best_m = f64::INFINITY;

    let mut iteration = 0u64;
    loop {
        let z = project_top_n1(&theta, ctx.n1());
        let m = ctx.assignment_mahalanobis(&z);
        if m <= a {
            return Ok(BalanceDraw {
                assignment: z,
                m_value: m,
                iterations: iteration,
                elapsed: start.elapsed(),
            });
        }
        best_m = best_m.min(m);
        if iteration == cfg.max_iters {
            return Err(Error::BudgetExhausted {
                method: "lgr",
                budget: cfg.max_iters,
                best_m,
            });
        }

        soft_assignment_into(&theta, cfg.delta, &mut ztilde);
        grad_soft_into(ctx, &ztilde, &mut grad).map_err(|e| match e {
            Error::DegenerateGroups { .. } => Error::Diverged { iteration },
            other => other,
        })?;
        iteration += 1;
        for ((t, g), zt) in theta.iter_mut().zip(&grad).zip(&ztilde) {
            let gamma = zt * (1.0 - zt) / cfg.delta;
            let xi: f64 = rng.sample(StandardNormal);
            *t += -cfg.eta * g * gamma + noise_scale * xi;
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::Diverged { iteration });
        }
    }
}
