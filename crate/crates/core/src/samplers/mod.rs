//! Assignment samplers.
//!
//! All samplers share one cost model: every candidate assignment is scored
//! with [`DesignContext::assignment_mahalanobis`], an `O(n d + d^2)` pass.

mod kernels;
mod lgr;
mod psrr;
mod simple;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::balance::{Assignment, DesignContext};
use crate::error::{Error, Result};

pub use kernels::{grad_latent, grad_soft_mahalanobis, project_top_n1, soft_assignment, LatentState};
pub use lgr::{sample_lgr, LgrConfig};
pub use psrr::sample_psrr;
pub use simple::{sample_arr, sample_cr};

pub const DEFAULT_ARR_MAX_DRAWS: u64 = 1_000_000;
pub const DEFAULT_PSRR_MAX_SWEEPS: u64 = 10_000;

/// One sampler outcome.
#[derive(Debug, Clone)]
pub struct BalanceDraw {
    pub assignment: Assignment,
    pub m_value: f64,
    pub iterations: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodId {
    Cr,
    Arr,
    Psrr,
    Lgr,
}

impl MethodId {
    pub const ALL: [MethodId; 4] = [MethodId::Cr, MethodId::Arr, MethodId::Psrr, MethodId::Lgr];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Cr => "cr",
            MethodId::Arr => "arr",
            MethodId::Psrr => "psrr",
            MethodId::Lgr => "lgr",
        }
    }

    /// Whether draws are guaranteed to satisfy `M <= a`.
    pub fn enforces_balance(self) -> bool {
        self != MethodId::Cr
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cr" => Ok(MethodId::Cr),
            "arr" => Ok(MethodId::Arr),
            "psrr" => Ok(MethodId::Psrr),
            "lgr" => Ok(MethodId::Lgr),
            other => Err(Error::InvalidInput(format!(
                "unknown method {other:?} (expected cr, arr, psrr or lgr)"
            ))),
        }
    }
}

/// A fully configured sampling mechanism. Randomization tests draw their
/// reference sets from the same `Sampler` that produced the observed
/// assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Sampler {
    Cr,
    Arr { max_draws: u64 },
    Psrr { max_sweeps: u64 },
    Lgr(LgrConfig),
}

impl Sampler {
    /// Sampler for `method` with default budgets and the given LGR settings.
    pub fn with_defaults(method: MethodId, lgr: LgrConfig) -> Self {
        match method {
            MethodId::Cr => Sampler::Cr,
            MethodId::Arr => Sampler::Arr {
                max_draws: DEFAULT_ARR_MAX_DRAWS,
            },
            MethodId::Psrr => Sampler::Psrr {
                max_sweeps: DEFAULT_PSRR_MAX_SWEEPS,
            },
            MethodId::Lgr => Sampler::Lgr(lgr),
        }
    }

    pub fn method(&self) -> MethodId {
        match self {
            Sampler::Cr => MethodId::Cr,
            Sampler::Arr { .. } => MethodId::Arr,
            Sampler::Psrr { .. } => MethodId::Psrr,
            Sampler::Lgr(_) => MethodId::Lgr,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, ctx: &DesignContext, rng: &mut R) -> Result<BalanceDraw> {
        match self {
            Sampler::Cr => {
                let start = std::time::Instant::now();
                let assignment = sample_cr(ctx, rng);
                let elapsed = start.elapsed();
                let m_value = ctx.assignment_mahalanobis(&assignment);
                Ok(BalanceDraw {
                    assignment,
                    m_value,
                    iterations: 0,
                    elapsed,
                })
            }
            Sampler::Arr { max_draws } => sample_arr(ctx, rng, *max_draws),
            Sampler::Psrr { max_sweeps } => sample_psrr(ctx, rng, *max_sweeps),
            Sampler::Lgr(cfg) => sample_lgr(ctx, cfg, rng),
        }
    }
}
