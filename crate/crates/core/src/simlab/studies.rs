use log::{info, warn};

use super::bootstrap::bootstrap_ci;
use super::config::StudyConfig;
use super::dgp::{generate_covariates, generate_outcomes, OutcomeModel};
use super::report::{CellReport, ExperimentReport};
use crate::balance::DesignContext;
use crate::error::{Error, Result};
use crate::inference::{diff_in_means, frt_p_value, invert_ci, Grid};
use crate::par;
use crate::samplers::{MethodId, Sampler};
use crate::seed::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Measure {
    Timing,
    Estimate,
    Infer,
    TimingAndEstimate,
}

impl Measure {
    fn outcomes(self) -> bool {
        self != Measure::Timing
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct RepOutcome {
    time_s: f64,
    m_value: f64,
    iterations: u64,
    tau_hat: f64,
    /// `beta' S^2_X beta` of the realized covariates.
    explained: f64,
    covered: bool,
    rejected: bool,
}

fn rep_seed(cfg: &StudyConfig, method: MethodId, d: usize, rep: usize) -> u64 {
    seed::derive(
        cfg.master_seed,
        &[seed::label(method.as_str()), d as u64, rep as u64],
    )
}

fn build_context(cfg: &StudyConfig, d: usize, rep_seed: u64) -> Result<DesignContext> {
    let x = generate_covariates(cfg.n, d, &mut seed::stream(rep_seed, &[purpose::COVARIATES]))?;
    DesignContext::build(x, cfg.n1(), cfg.p_accept)
}

fn run_rep(
    cfg: &StudyConfig,
    d: usize,
    sampler: &Sampler,
    rep_seed: u64,
    measure: Measure,
) -> Result<RepOutcome> {
    let ctx = build_context(cfg, d, rep_seed)?;
    let draw = sampler.draw(&ctx, &mut seed::stream(rep_seed, &[purpose::SAMPLER]))?;
    let mut out = RepOutcome {
        time_s: draw.elapsed.as_secs_f64(),
        m_value: draw.m_value,
        iterations: draw.iterations,
        ..RepOutcome::default()
    };
    if !measure.outcomes() {
        return Ok(out);
    }

    let model = OutcomeModel::ones(d, cfg.tau, cfg.noise_sd);
    let y = generate_outcomes(
        ctx.covariates(),
        &draw.assignment,
        &model,
        &mut seed::stream(rep_seed, &[purpose::NOISE]),
    )?;
    out.tau_hat = diff_in_means(&y, &draw.assignment);
    out.explained = model.explained_variance(ctx.sample_cov());

    if measure == Measure::Infer {
        let grid = Grid::around_estimate(&y, &draw.assignment)?;
        let ci = invert_ci(
            &ctx,
            &y,
            &draw.assignment,
            cfg.alpha,
            sampler,
            cfg.frt_reps,
            &grid,
            seed::derive(rep_seed, &[purpose::REFERENCE]),
        )?;
        out.covered = ci.contains(cfg.tau);
        let test = frt_p_value(
            &ctx,
            &y,
            &draw.assignment,
            0.0,
            sampler,
            cfg.frt_reps,
            seed::derive(rep_seed, &[purpose::POWER]),
        )?;
        out.rejected = test.p_value <= cfg.alpha;
    }
    Ok(out)
}

/// Runs `cfg.reps` replications; censoring errors are counted, any other
/// error aborts.
fn run_cell(
    cfg: &StudyConfig,
    method: MethodId,
    d: usize,
    sampler: &Sampler,
    measure: Measure,
) -> Result<(Vec<RepOutcome>, usize)> {
    let results = par::map_range(cfg.reps, |rep| {
        run_rep(cfg, d, sampler, rep_seed(cfg, method, d, rep), measure)
    });
    let mut done = Vec::with_capacity(results.len());
    let mut censored = 0;
    for r in results {
        match r {
            Ok(o) => done.push(o),
            Err(e) if e.is_censoring() => censored += 1,
            Err(e) => return Err(e),
        }
    }
    if censored > 0 {
        warn!(
            "{method} d={d}: {censored} of {} replications censored (sampler budget {}); \
             aggregates use the remaining {}",
            cfg.reps,
            budget_of(sampler),
            done.len()
        );
    }
    Ok((done, censored))
}

fn budget_of(sampler: &Sampler) -> String {
    match sampler {
        Sampler::Cr => "none".into(),
        Sampler::Arr { max_draws } => format!("{max_draws} draws"),
        Sampler::Psrr { max_sweeps } => format!("{max_sweeps} sweeps"),
        Sampler::Lgr(c) => format!("{} iterations", c.max_iters),
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn fill_timing(cfg: &StudyConfig, cell: &mut CellReport, reps: &[RepOutcome]) -> Result<()> {
    let times: Vec<f64> = reps.iter().map(|r| r.time_s).collect();
    if times.is_empty() {
        return Ok(());
    }
    cell.mean_time_s = Some(mean(&times));
    if times.len() >= 2 {
        let mut rng = seed::stream(
            cfg.master_seed,
            &[
                seed::label(cell.method.as_str()),
                cell.d as u64,
                purpose::BOOTSTRAP,
                cell.delta.unwrap_or(0.0).to_bits(),
                cell.eta.unwrap_or(0.0).to_bits(),
            ],
        );
        let (lo, hi) = bootstrap_ci(&times, 0.95, cfg.bootstrap_resamples, &mut rng)?;
        cell.time_ci_lo = Some(lo);
        cell.time_ci_hi = Some(hi);
    }
    cell.samples.times_s = times;
    Ok(())
}

fn fill_estimate(cfg: &StudyConfig, cell: &mut CellReport, reps: &[RepOutcome]) {
    let taus: Vec<f64> = reps.iter().map(|r| r.tau_hat).collect();
    if taus.len() >= 2 {
        cell.bias = Some(mean(&taus) - cfg.tau);
        cell.sd_tau = Some(sample_var(&taus).sqrt());
    }
    cell.samples.tau_hats = taus;
}

fn base_cell(method: MethodId, d: usize, reps: &[RepOutcome], censored: usize) -> CellReport {
    let mut cell = CellReport::new(method, d);
    cell.completed_reps = reps.len();
    cell.censored_reps = censored;
    cell.samples.m_values = reps.iter().map(|r| r.m_value).collect();
    cell.samples.iterations = reps.iter().map(|r| r.iterations).collect();
    cell
}

/// Wall time of one sampler call per replication, with a percentile
/// bootstrap 95% interval for the mean.
pub fn run_timing_study(cfg: &StudyConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &d in &cfg.dims {
        for &method in &cfg.methods {
            let (reps, censored) = run_cell(cfg, method, d, &cfg.sampler(method), Measure::Timing)?;
            let mut cell = base_cell(method, d, &reps, censored);
            fill_timing(cfg, &mut cell, &reps)?;
            info!(
                "timing {method} d={d}: mean {:.3e} s over {} reps",
                cell.mean_time_s.unwrap_or(f64::NAN),
                cell.completed_reps
            );
            cells.push(cell);
        }
    }
    Ok(ExperimentReport {
        study: "benchmark",
        with_params: false,
        cells,
    })
}

/// Bias and spread of the difference-in-means estimator, with the variance
/// ratio against complete randomization and the `R^2` of the variance
/// reduction bound, `R^2 = (n / (n1 n0)) beta' S^2_X beta / Var_CR`.
///
/// When `cfg.methods` omits `cr`, a complete-randomization baseline is run
/// anyway (and not reported) so the ratios are defined.
pub fn run_estimation_study(cfg: &StudyConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if !cfg.n.is_multiple_of(2) {
        warn!("n = {} is odd; the unbiasedness argument assumes equal arms", cfg.n);
    }
    let scale = cfg.n as f64 / (cfg.n1() as f64 * (cfg.n - cfg.n1()) as f64);
    let mut cells = Vec::new();
    for &d in &cfg.dims {
        let mut row: Vec<(CellReport, Vec<RepOutcome>)> = Vec::new();
        for &method in &cfg.methods {
            let (reps, censored) = run_cell(cfg, method, d, &cfg.sampler(method), Measure::Estimate)?;
            let mut cell = base_cell(method, d, &reps, censored);
            fill_estimate(cfg, &mut cell, &reps);
            row.push((cell, reps));
        }
        let cr_var = match row.iter().find(|(c, _)| c.method == MethodId::Cr) {
            Some((c, _)) => c.sd_tau.map(|s| s * s),
            None => {
                let (reps, _) = run_cell(cfg, MethodId::Cr, d, &Sampler::Cr, Measure::Estimate)?;
                let taus: Vec<f64> = reps.iter().map(|r| r.tau_hat).collect();
                (taus.len() >= 2).then(|| sample_var(&taus))
            }
        };
        for (mut cell, reps) in row {
            if let (Some(v_cr), Some(sd)) = (cr_var, cell.sd_tau) {
                cell.var_ratio = Some(sd * sd / v_cr);
                let explained = mean(&reps.iter().map(|r| r.explained).collect::<Vec<_>>());
                cell.r_squared = Some(scale * explained / v_cr);
            }
            info!(
                "estimate {} d={d}: bias {:.4}, sd {:.4}",
                cell.method,
                cell.bias.unwrap_or(f64::NAN),
                cell.sd_tau.unwrap_or(f64::NAN)
            );
            cells.push(cell);
        }
    }
    Ok(ExperimentReport {
        study: "estimate",
        with_params: false,
        cells,
    })
}

/// Coverage of test-inversion intervals for `cfg.tau` and power of the
/// randomization test of `tau = 0`, both with reference sets drawn from the
/// method under study.
pub fn run_inference_study(cfg: &StudyConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &d in &cfg.dims {
        for &method in &cfg.methods {
            let (reps, censored) = run_cell(cfg, method, d, &cfg.sampler(method), Measure::Infer)?;
            let mut cell = base_cell(method, d, &reps, censored);
            fill_estimate(cfg, &mut cell, &reps);
            if !reps.is_empty() {
                let k = reps.len() as f64;
                cell.coverage = Some(reps.iter().filter(|r| r.covered).count() as f64 / k);
                cell.power = Some(reps.iter().filter(|r| r.rejected).count() as f64 / k);
            }
            info!(
                "infer {method} d={d}: coverage {:.3}, power {:.3}",
                cell.coverage.unwrap_or(f64::NAN),
                cell.power.unwrap_or(f64::NAN)
            );
            cells.push(cell);
        }
    }
    Ok(ExperimentReport {
        study: "infer",
        with_params: false,
        cells,
    })
}

/// LGR timing and estimation over `deltas` (at `cfg.eta`) and `etas` (at
/// `cfg.delta`). All cells at a dimension share replication seeds, so
/// differences between cells come from the hyperparameters alone.
pub fn sensitivity_sweep(cfg: &StudyConfig, deltas: &[f64], etas: &[f64]) -> Result<ExperimentReport> {
    cfg.validate()?;
    if deltas.is_empty() || etas.is_empty() {
        return Err(Error::InvalidInput("deltas and etas must be non-empty".into()));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for pair in deltas
        .iter()
        .map(|&dl| (dl, cfg.eta))
        .chain(etas.iter().map(|&e| (cfg.delta, e)))
    {
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    let mut cells = Vec::new();
    for &d in &cfg.dims {
        for &(delta, eta) in &pairs {
            let lgr = crate::samplers::LgrConfig::new(delta, eta, cfg.max_iters)?;
            let (reps, censored) = run_cell(
                cfg,
                MethodId::Lgr,
                d,
                &Sampler::Lgr(lgr),
                Measure::TimingAndEstimate,
            )?;
            let mut cell = base_cell(MethodId::Lgr, d, &reps, censored);
            cell.delta = Some(delta);
            cell.eta = Some(eta);
            fill_timing(cfg, &mut cell, &reps)?;
            fill_estimate(cfg, &mut cell, &reps);
            info!(
                "sensitivity d={d} delta={delta} eta={eta}: mean {:.3e} s, censored {censored}",
                cell.mean_time_s.unwrap_or(f64::NAN)
            );
            cells.push(cell);
        }
    }
    Ok(ExperimentReport {
        study: "sensitivity",
        with_params: true,
        cells,
    })
}
