use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ftscast::data::read_matrix_csv;
use ftscast::eval::{functional_acf, mafe_msfe, mean_interval_score, write_tidy_csv};
use ftscast::pipeline::{run_forecast, run_simulation, run_update, RunConfig};
use ftscast::{FunctionalTimeSeries, Grid};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "ftscast", version, about = "Functional time series forecasting and intraday updating")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replicated simulation study on VAR(2) scores.
    Simulate(SimulateArgs),
    /// Rolling-origin one-step forecasts over the last q curves.
    Forecast(RunArgs),
    /// Remaining-day forecasts from partially observed days.
    Update(UpdateArgs),
    /// Score forecasts (and optional intervals) against actual curves.
    Evaluate(EvaluateArgs),
    /// Functional autocorrelation of residual curves.
    Acf(AcfArgs),
}

#[derive(Args, Debug, Default)]
struct Shared {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, env = "FTSCAST_OUT")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Explained-variance fraction for choosing K.
    #[arg(long)]
    delta: Option<f64>,
    /// Score forecaster: var, arima or mean.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    robust: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    input: Option<PathBuf>,
    /// Points per curve.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Bootstrap replicates.
    #[arg(long = "B")]
    b: Option<usize>,
    /// Holdout curves.
    #[arg(long)]
    q: Option<usize>,
    /// Square-root transform before modelling.
    #[arg(long)]
    sqrt: bool,
    /// Point forecasts only.
    #[arg(long)]
    no_intervals: bool,
}

#[derive(Args, Debug)]
struct UpdateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated observed-prefix lengths.
    #[arg(long)]
    m0: Option<String>,
    /// Comma-separated subset of ts, bm, flr.
    #[arg(long)]
    update_methods: Option<String>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    reps: Option<usize>,
    /// Training curves per replication.
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated outlier counts.
    #[arg(long)]
    levels: Option<String>,
    /// none, scores or curves.
    #[arg(long)]
    contamination_mode: Option<String>,
    /// Comma-separated `<standard|robust>_<var|arima|mean>` labels.
    #[arg(long)]
    methods: Option<String>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Actual curves, one per row.
    #[arg(long)]
    actual: PathBuf,
    #[arg(long)]
    forecast: PathBuf,
    #[arg(long, requires = "upper")]
    lower: Option<PathBuf>,
    #[arg(long, requires = "lower")]
    upper: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    alpha: f64,
    #[arg(long, default_value = "forecast")]
    label: String,
    #[arg(long, env = "FTSCAST_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AcfArgs {
    /// Residual curves, one per row.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 20)]
    max_lag: usize,
    #[arg(long, env = "FTSCAST_OUT")]
    out: Option<PathBuf>,
}

fn base_config(shared: &Shared) -> Result<RunConfig> {
    let mut cfg = match &shared.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut set = |k: &str, v: String| cfg.set(k, &v);
    if let Some(v) = &shared.out {
        set("out", v.display().to_string())?;
    }
    if let Some(v) = shared.seed {
        set("seed", v.to_string())?;
    }
    if let Some(v) = shared.delta {
        set("delta", v.to_string())?;
    }
    if let Some(v) = &shared.method {
        set("method", v.clone())?;
    }
    if shared.robust {
        set("robust", "true".into())?;
    }
    Ok(cfg)
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = base_config(&args.shared)?;
    if let Some(v) = &args.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.b {
        cfg.replicates = v;
    }
    if let Some(v) = args.q {
        cfg.q = v;
    }
    if args.sqrt {
        cfg.sqrt = true;
    }
    if args.no_intervals {
        cfg.intervals = false;
    }
    Ok(cfg)
}

fn paths(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|p| p.display().to_string()).collect()
}

fn out_dir(out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn evaluate(args: &EvaluateArgs) -> Result<serde_json::Value> {
    let actual = read_matrix_csv(&args.actual)?;
    let forecast = read_matrix_csv(&args.forecast)?;
    let mut report = mafe_msfe(args.label.clone(), &actual, &forecast)?;
    if let (Some(l), Some(u)) = (&args.lower, &args.upper) {
        let scores = mean_interval_score(&read_matrix_csv(l)?, &read_matrix_csv(u)?, &actual, args.alpha)?;
        report = report.with_intervals(scores, args.alpha)?;
    }
    let dir = out_dir(&args.out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let json_path = dir.join("evaluation.json");
    let csv_path = dir.join("evaluation.csv");
    report.write_json(&json_path)?;
    if let Err(e) = write_tidy_csv(&csv_path, &[(&report, 1)]) {
        let _ = std::fs::remove_file(&json_path);
        return Err(e.into());
    }
    Ok(json!({
        "mean_mafe": report.mean_mafe,
        "mean_msfe": report.mean_msfe,
        "mean_interval_score": report.mean_interval_score,
        "files": paths(&[json_path, csv_path]),
    }))
}

fn acf(args: &AcfArgs) -> Result<serde_json::Value> {
    let m = read_matrix_csv(&args.input)?;
    let grid = Grid::equispaced(m.ncols(), 0.0, m.ncols() as f64)?;
    let acf = functional_acf(&FunctionalTimeSeries::new(grid, m)?, args.max_lag)?;
    let dir = out_dir(&args.out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("acf.json");
    write_file(&path, &serde_json::to_string_pretty(&acf)?)?;
    Ok(json!({
        "critical": acf.critical,
        "fraction_below_critical": acf.fraction_below_critical(),
        "files": paths(&[path]),
    }))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<serde_json::Value> {
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.threads;

    match cli.command {
        Command::Simulate(args) => {
            let mut cfg = base_config(&args.shared)?;
            if let Some(v) = args.reps {
                cfg.reps = v;
            }
            if let Some(v) = args.n {
                cfg.sim_n = v;
            }
            if let Some(v) = &args.levels {
                cfg.set("levels", v)?;
            }
            if let Some(v) = &args.contamination_mode {
                cfg.set("contamination_mode", v)?;
            }
            if let Some(v) = &args.methods {
                cfg.set("sim_methods", v)?;
            }
            let run = run_simulation(&cfg)?;
            Ok(json!({ "cells": run.table.cells, "files": paths(&run.files) }))
        }
        Command::Forecast(args) => {
            let run = run_forecast(&run_config(&args)?)?;
            Ok(json!({
                "method": run.report.method,
                "mean_mafe": run.report.mean_mafe,
                "mean_msfe": run.report.mean_msfe,
                "mean_interval_score": run.report.mean_interval_score,
                "files": paths(&run.files),
            }))
        }
        Command::Update(args) => {
            let mut cfg = run_config(&args.run)?;
            if let Some(v) = &args.m0 {
                cfg.set("m0", v)?;
            }
            if let Some(v) = &args.update_methods {
                cfg.set("update_methods", v)?;
            }
            let run = run_update(&cfg)?;
            let summary: Vec<_> = run
                .reports
                .iter()
                .map(|(m0, r)| {
                    json!({
                        "m0": m0,
                        "method": r.method,
                        "mean_mafe": r.mean_mafe,
                        "mean_msfe": r.mean_msfe,
                        "mean_interval_score": r.mean_interval_score,
                    })
                })
                .collect();
            Ok(json!({ "reports": summary, "files": paths(&run.files) }))
        }
        Command::Evaluate(args) => evaluate(&args),
        Command::Acf(args) => acf(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
            let report = json!({ "error": e.to_string(), "chain": chain });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
