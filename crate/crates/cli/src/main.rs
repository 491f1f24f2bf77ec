mod config;
mod failure;
mod manifest;

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use rerand::balance::read_covariates_path;
use rerand::samplers::{LgrConfig, MethodId, Sampler, DEFAULT_ARR_MAX_DRAWS, DEFAULT_PSRR_MAX_SWEEPS};
use rerand::simlab::{
    run_estimation_study, run_inference_study, run_timing_study, sensitivity_sweep, ExperimentReport,
};
use rerand::{seed, DesignContext};
use serde_json::{json, Map, Value};

use crate::failure::Failure;
use crate::manifest::{timestamp, write_atomic, RunManifest};

#[derive(Parser)]
#[command(name = "rerand", version, about = "Balanced treatment assignment and rerandomization studies")]
struct Cli {
    /// Cap on worker threads (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one balanced assignment for a covariate CSV.
    Sample(SampleArgs),
    /// Time one balanced draw per replication for each method and d.
    Benchmark(StudyArgs),
    /// Bias, SD and variance reduction of the difference-in-means estimator.
    Estimate(StudyArgs),
    /// Coverage and power of randomization-based inference.
    Infer(StudyArgs),
    /// LGR timing and estimation over temperature and step-size grids.
    Sensitivity(SensitivityArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Covariate CSV: n rows, d numeric columns.
    covariates: PathBuf,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
    /// Treated units (default n / 2).
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long, default_value = "lgr")]
    method: MethodId,
    #[arg(long, default_value_t = 0.01)]
    p_accept: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = LgrConfig::default().delta)]
    delta: f64,
    #[arg(long, default_value_t = LgrConfig::default().eta)]
    eta: f64,
    #[arg(long, default_value_t = LgrConfig::default().max_iters)]
    max_iters: u64,
    #[arg(long, default_value_t = DEFAULT_ARR_MAX_DRAWS)]
    max_draws: u64,
    #[arg(long, default_value_t = DEFAULT_PSRR_MAX_SWEEPS)]
    max_sweeps: u64,
    #[arg(long, default_value = "assignment.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct StudyArgs {
    /// TOML study file, or a manifest JSON from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    p_accept: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<MethodId>>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    frt_reps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    arr_max_draws: Option<u64>,
    #[arg(long)]
    psrr_max_sweeps: Option<u64>,
    #[arg(long)]
    bootstrap_resamples: Option<usize>,
    /// Use n = 500, reps = 1000, frt_reps = 100 as the base.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    study: StudyArgs,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Err(f) = run(cli) {
        eprintln!("error: {f}");
        std::process::exit(f.code);
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::input("--workers must be positive"));
        }
        pool = pool.num_threads(w);
    }
    pool.build_global().map_err(|e| Failure::other(e.to_string()))?;
    let workers = rayon::current_num_threads();
    match cli.command {
        Command::Sample(a) => cmd_sample(a, workers),
        Command::Benchmark(a) => cmd_study("benchmark", a, Map::new(), workers),
        Command::Estimate(a) => cmd_study("estimate", a, Map::new(), workers),
        Command::Infer(a) => cmd_study("infer", a, Map::new(), workers),
        Command::Sensitivity(a) => {
            let mut extra = Map::new();
            if let Some(d) = a.deltas {
                extra.insert("deltas".into(), json!(d));
            }
            if let Some(e) = a.etas {
                extra.insert("etas".into(), json!(e));
            }
            cmd_study("sensitivity", a.study, extra, workers)
        }
    }
}

fn pick_seed(seed: Option<u64>) -> (u64, &'static str) {
    match seed {
        Some(s) => (s, "user"),
        None => (rand::random(), "entropy"),
    }
}

fn cmd_sample(a: SampleArgs, workers: usize) -> Result<(), Failure> {
    let started = Utc::now();
    let x = read_covariates_path(&a.covariates, a.header)
        .map_err(|e| Failure::input(format!("{}: {e}", a.covariates.display())).with_code_of(&e))?;
    let n1 = a.n1.unwrap_or(x.n() / 2);
    let (d, n) = (x.d(), x.n());
    let ctx = DesignContext::build(x, n1, a.p_accept)?;
    let lgr = LgrConfig::new(a.delta, a.eta, a.max_iters)?;
    let sampler = match a.method {
        MethodId::Cr => Sampler::Cr,
        MethodId::Arr => Sampler::Arr { max_draws: a.max_draws },
        MethodId::Psrr => Sampler::Psrr { max_sweeps: a.max_sweeps },
        MethodId::Lgr => Sampler::Lgr(lgr),
    };
    let (master_seed, seed_source) = pick_seed(a.seed);
    let draw = sampler.draw(&ctx, &mut seed::stream(master_seed, &[seed::purpose::SAMPLER]))?;
    info!(
        "{}: M = {:.6} (threshold {:.6}) after {} iterations",
        a.method,
        draw.m_value,
        ctx.threshold_a(),
        draw.iterations
    );

    let mut csv = String::from("unit_index,assignment\n");
    for (i, &t) in draw.assignment.as_slice().iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", u8::from(t)));
    }
    write_atomic(&a.out, csv.as_bytes())?;

    let config = json!({
        "covariates": a.covariates,
        "header": a.header,
        "n1": n1,
        "method": a.method,
        "p_accept": a.p_accept,
        "master_seed": master_seed,
        "delta": a.delta,
        "eta": a.eta,
        "max_iters": a.max_iters,
        "max_draws": a.max_draws,
        "max_sweeps": a.max_sweeps,
    });
    let result = json!({
        "n": n,
        "d": d,
        "m_value": draw.m_value,
        "threshold_a": ctx.threshold_a(),
        "balanced": draw.m_value <= ctx.threshold_a(),
        "iterations": draw.iterations,
        "elapsed_s": draw.elapsed.as_secs_f64(),
    });
    finish("sample", master_seed, seed_source, config, workers, started, &a.out, Some(result))
}

impl Failure {
    fn with_code_of(mut self, err: &rerand::Error) -> Self {
        self.code = failure::exit_code(err);
        self
    }
}

fn flag_overrides(a: &StudyArgs) -> Map<String, Value> {
    let mut m = Map::new();
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            m.insert(k.into(), v);
        }
    };
    put("master_seed", a.seed.map(|v| json!(v)));
    put("n", a.n.map(|v| json!(v)));
    put("dims", a.dims.as_ref().map(|v| json!(v)));
    put("p_accept", a.p_accept.map(|v| json!(v)));
    put("methods", a.methods.as_ref().map(|v| json!(v)));
    put("reps", a.reps.map(|v| json!(v)));
    put("frt_reps", a.frt_reps.map(|v| json!(v)));
    put("alpha", a.alpha.map(|v| json!(v)));
    put("tau", a.tau.map(|v| json!(v)));
    put("noise_sd", a.noise_sd.map(|v| json!(v)));
    put("delta", a.delta.map(|v| json!(v)));
    put("eta", a.eta.map(|v| json!(v)));
    put("max_iters", a.max_iters.map(|v| json!(v)));
    put("arr_max_draws", a.arr_max_draws.map(|v| json!(v)));
    put("psrr_max_sweeps", a.psrr_max_sweeps.map(|v| json!(v)));
    put("bootstrap_resamples", a.bootstrap_resamples.map(|v| json!(v)));
    m
}

fn cmd_study(command: &str, a: StudyArgs, extra: Map<String, Value>, workers: usize) -> Result<(), Failure> {
    let started = Utc::now();
    let file = a
        .config
        .as_deref()
        .map(|p| config::read_config_file(p, command))
        .transpose()?;
    let seeded_by_file = file
        .as_ref()
        .is_some_and(|f| f.top.contains_key("master_seed") || f.section.contains_key("master_seed"));
    let mut flags = Map::new();
    if a.full_scale {
        let p = rerand::simlab::StudyConfig::full_scale();
        flags.insert("n".into(), json!(p.n));
        flags.insert("reps".into(), json!(p.reps));
        flags.insert("frt_reps".into(), json!(p.frt_reps));
    }
    flags.extend(flag_overrides(&a));
    flags.extend(extra);
    let seed_source = if a.seed.is_some() || seeded_by_file {
        "user"
    } else {
        flags.insert("master_seed".into(), json!(rand::random::<u64>()));
        "entropy"
    };
    let resolved = config::resolve(command, file, flags)?;
    let cfg = &resolved.study;
    info!(
        "{command}: n = {}, dims = {:?}, reps = {}, seed = {}, workers = {workers}",
        cfg.n, cfg.dims, cfg.reps, cfg.master_seed
    );

    let clock = Instant::now();
    let report: ExperimentReport = match command {
        "benchmark" => run_timing_study(cfg)?,
        "estimate" => run_estimation_study(cfg)?,
        "infer" => run_inference_study(cfg)?,
        "sensitivity" => sensitivity_sweep(
            cfg,
            resolved.deltas.as_deref().unwrap_or_default(),
            resolved.etas.as_deref().unwrap_or_default(),
        )?,
        _ => unreachable!("unknown study command"),
    };
    info!("{command} finished in {:.1} s", clock.elapsed().as_secs_f64());

    let censored = report.total_censored();
    if censored > 0 {
        let cells: Vec<String> = report
            .cells
            .iter()
            .filter(|c| c.censored_reps > 0)
            .map(|c| format!("{} d={} ({})", c.method, c.d, c.censored_reps))
            .collect();
        warn!("{censored} replication(s) hit a sampler budget and were excluded: {}", cells.join(", "));
    }

    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(format!("{command}.csv")));
    write_atomic(&out, report.to_csv_string().as_bytes())?;
    let result = json!({ "cells": report.cells.len(), "censored_reps": censored });
    finish(
        command,
        cfg.master_seed,
        seed_source,
        resolved.to_value(),
        workers,
        started,
        &out,
        Some(result),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    command: &str,
    master_seed: u64,
    seed_source: &'static str,
    config: Value,
    workers: usize,
    started: chrono::DateTime<Utc>,
    out: &Path,
    result: Option<Value>,
) -> Result<(), Failure> {
    let manifest = RunManifest {
        command: command.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        master_seed,
        seed_source,
        config,
        workers,
        started_at: timestamp(started),
        finished_at: timestamp(Utc::now()),
        outputs: vec![out.to_path_buf()],
        result,
    };
    let path = manifest.write(out)?;
    info!("wrote {} and {}", out.display(), path.display());
    Ok(())
}
