use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{LgrConfig, MethodId, Sampler, DEFAULT_ARR_MAX_DRAWS, DEFAULT_PSRR_MAX_SWEEPS};

/// Everything a study needs; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Units per experiment; arms are `n / 2` and `n - n / 2`.
    pub n: usize,
    pub dims: Vec<usize>,
    pub p_accept: f64,
    pub methods: Vec<MethodId>,
    /// Monte Carlo replications per cell.
    pub reps: usize,
    /// Reference draws per randomization test.
    pub frt_reps: usize,
    pub alpha: f64,
    pub master_seed: u64,
    pub tau: f64,
    pub noise_sd: f64,
    pub delta: f64,
    pub eta: f64,
    pub max_iters: u64,
    pub arr_max_draws: u64,
    pub psrr_max_sweeps: u64,
    pub bootstrap_resamples: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let lgr = LgrConfig::default();
        Self {
            n: 200,
            dims: vec![2, 5, 10, 20, 50],
            p_accept: 0.01,
            methods: MethodId::ALL.to_vec(),
            reps: 200,
            frt_reps: 50,
            alpha: 0.05,
            master_seed: 0,
            tau: 0.5,
            noise_sd: 1.0,
            delta: lgr.delta,
            eta: lgr.eta,
            max_iters: lgr.max_iters,
            arr_max_draws: DEFAULT_ARR_MAX_DRAWS,
            psrr_max_sweeps: DEFAULT_PSRR_MAX_SWEEPS,
            bootstrap_resamples: 1000,
        }
    }
}

impl StudyConfig {
    /// Full-size setting: n = 500, 1000 replications, 100 reference draws.
    pub fn full_scale() -> Self {
        Self {
            n: 500,
            reps: 1000,
            frt_reps: 100,
            ..Self::default()
        }
    }

    pub fn n1(&self) -> usize {
        self.n / 2
    }

    pub fn lgr(&self) -> LgrConfig {
        LgrConfig {
            delta: self.delta,
            eta: self.eta,
            max_iters: self.max_iters,
        }
    }

    pub fn sampler(&self, method: MethodId) -> Sampler {
        match method {
            MethodId::Cr => Sampler::Cr,
            MethodId::Arr => Sampler::Arr {
                max_draws: self.arr_max_draws,
            },
            MethodId::Psrr => Sampler::Psrr {
                max_sweeps: self.psrr_max_sweeps,
            },
            MethodId::Lgr => Sampler::Lgr(self.lgr()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.n < 4 {
            return bad(format!("n must be at least 4, got {}", self.n));
        }
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0 || d >= self.n) {
            return bad(format!("every d must satisfy 0 < d < n (d = {d}, n = {})", self.n));
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.reps < 2 {
            return bad(format!("reps must be at least 2, got {}", self.reps));
        }
        if self.frt_reps == 0 {
            return bad("frt_reps must be positive".into());
        }
        if !(self.p_accept > 0.0 && self.p_accept < 1.0) {
            return bad(format!("p_accept must be in (0, 1), got {}", self.p_accept));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if self.noise_sd.is_nan() || self.noise_sd <= 0.0 || !self.tau.is_finite() {
            return bad("noise_sd must be positive and tau finite".into());
        }
        if self.bootstrap_resamples < 100 {
            return bad("bootstrap_resamples must be at least 100".into());
        }
        if self.arr_max_draws == 0 || self.psrr_max_sweeps == 0 {
            return bad("sampler budgets must be positive".into());
        }
        self.lgr().validate()
    }
}
