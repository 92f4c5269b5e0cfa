//! End-to-end runs driven by a [`RunConfig`]: rolling-origin forecasting,
//! intraday updating, and the simulation study. Every run writes its files
//! into `out_dir` and removes them again if a later stage fails.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::data::{create_file, ingest_series, segment, write_matrix_csv, FunctionalTimeSeries, Grid, PartialCurve, SqrtTransform};
use crate::error::{Error, Result};
use crate::eval::{functional_acf, mafe_msfe, mean_interval_score, write_json, write_tidy_csv, AccuracyReport};
use crate::fpca::{FpcaVariant, RobustConfig, Truncation};
use crate::scorecast::{ts_forecast_curve, Forecaster, Support, VAR_MAX_ORDER};
use crate::sim::{replication_study, ContaminationMode, SimMethod, StudyConfig, StudyTable, DEFAULT_LEVELS};
use crate::uncertainty::{
    bootstrap_pointwise_pi, flr_bootstrap_pi, insample_curve_errors, insample_score_errors, prediction_band,
    BootstrapConfig, DEFAULT_MIN_TRAINING, DEFAULT_REPLICATES,
};
use crate::update::{bm_forecast, bm_rotate, flr_fit, flr_predict};
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMethod {
    Ts,
    Bm,
    Flr,
}

impl UpdateMethod {
    pub fn label(&self) -> &'static str {
        match self {
            UpdateMethod::Ts => "ts",
            UpdateMethod::Bm => "bm",
            UpdateMethod::Flr => "flr",
        }
    }
}

impl std::str::FromStr for UpdateMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ts" => Ok(Self::Ts),
            "bm" => Ok(Self::Bm),
            "flr" => Ok(Self::Flr),
            other => Err(Error::invalid(format!("unknown update method {other:?}"))),
        }
    }
}

pub fn parse_forecaster(s: &str, max_order: usize) -> Result<Forecaster> {
    match s {
        "var" => Ok(Forecaster::Var { max_order }),
        "arima" | "uni" => Ok(Forecaster::Arima),
        "mean" => Ok(Forecaster::Mean),
        other => Err(Error::invalid(format!("unknown forecasting method {other:?}"))),
    }
}

fn parse_sim_method(s: &str, max_order: usize) -> Result<SimMethod> {
    let (fpca, method) = s
        .split_once('_')
        .ok_or_else(|| Error::invalid(format!("simulation method {s:?} is not <fpca>_<forecaster>")))?;
    let robust = match fpca {
        "standard" => false,
        "robust" => true,
        other => return Err(Error::invalid(format!("unknown FPCA variant {other:?}"))),
    };
    Ok(SimMethod {
        robust,
        forecaster: parse_forecaster(method, max_order)?,
    })
}

fn parse_list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::invalid(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::invalid(format!("{key}: expected a boolean, got {value:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub p: usize,
    pub support_start: f64,
    pub support_end: f64,
    pub sqrt: bool,
    pub delta: f64,
    pub robust: bool,
    pub lambda: f64,
    pub forecaster: Forecaster,
    pub update_methods: Vec<UpdateMethod>,
    /// Empty means `round(7p / 12)`, i.e. 28 of 48 half-hours.
    pub m0: Vec<usize>,
    pub alpha: f64,
    pub replicates: usize,
    pub intervals: bool,
    pub q: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub l_min: usize,
    pub max_lag: usize,
    pub reps: usize,
    pub sim_n: usize,
    pub levels: Vec<usize>,
    pub contamination_mode: ContaminationMode,
    pub sim_methods: Vec<SimMethod>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            p: 48,
            support_start: 0.0,
            support_end: 24.0,
            sqrt: false,
            delta: 0.9,
            robust: false,
            lambda: RobustConfig::default().lambda,
            forecaster: Forecaster::var(),
            update_methods: vec![UpdateMethod::Ts, UpdateMethod::Bm, UpdateMethod::Flr],
            m0: Vec::new(),
            alpha: 0.2,
            replicates: DEFAULT_REPLICATES,
            intervals: true,
            q: 72,
            seed: 1,
            out_dir: PathBuf::from("."),
            l_min: DEFAULT_MIN_TRAINING,
            max_lag: 20,
            reps: 1000,
            sim_n: 500,
            levels: DEFAULT_LEVELS.to_vec(),
            contamination_mode: ContaminationMode::Scores,
            sim_methods: StudyConfig::default().methods,
        }
    }
}

impl RunConfig {
    /// Set one field from its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "input" => self.input = Some(PathBuf::from(value)),
            "p" => self.p = parse_num(key, value)?,
            "support_start" => self.support_start = parse_num(key, value)?,
            "support_end" => self.support_end = parse_num(key, value)?,
            "sqrt" => self.sqrt = parse_bool(key, value)?,
            "delta" => self.delta = parse_num(key, value)?,
            "robust" => self.robust = parse_bool(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "method" => self.forecaster = parse_forecaster(value, self.var_max_order())?,
            "var_max_order" => {
                let order = parse_num(key, value)?;
                if let Forecaster::Var { max_order } = &mut self.forecaster {
                    *max_order = order;
                }
            }
            "update_methods" => self.update_methods = parse_list(value, str::parse)?,
            "m0" => self.m0 = parse_list(value, |s| parse_num(key, s))?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "B" | "replicates" => self.replicates = parse_num(key, value)?,
            "intervals" => self.intervals = parse_bool(key, value)?,
            "q" => self.q = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "out" | "out_dir" => self.out_dir = PathBuf::from(value),
            "l_min" => self.l_min = parse_num(key, value)?,
            "max_lag" => self.max_lag = parse_num(key, value)?,
            "reps" => self.reps = parse_num(key, value)?,
            "sim_n" => self.sim_n = parse_num(key, value)?,
            "levels" => self.levels = parse_list(value, |s| parse_num(key, s))?,
            "contamination_mode" => self.contamination_mode = value.parse()?,
            "sim_methods" => {
                let order = self.var_max_order();
                self.sim_methods = parse_list(value, |s| parse_sim_method(s, order))?;
            }
            other => return Err(Error::invalid(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    fn var_max_order(&self) -> usize {
        match self.forecaster {
            Forecaster::Var { max_order } => max_order,
            _ => VAR_MAX_ORDER,
        }
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: i + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            self.set(k.trim(), v).map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_kv(&text)
    }

    /// The resolved configuration in the same format [`RunConfig::from_kv`]
    /// reads.
    pub fn to_kv(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut s = String::new();
        if let Some(input) = &self.input {
            let _ = writeln!(s, "input = {}", input.display());
        }
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "support_start = {}", self.support_start);
        let _ = writeln!(s, "support_end = {}", self.support_end);
        let _ = writeln!(s, "sqrt = {}", self.sqrt);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "robust = {}", self.robust);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "method = {}", self.forecaster.label());
        let _ = writeln!(s, "var_max_order = {}", self.var_max_order());
        let _ = writeln!(s, "update_methods = {}", join(self.update_methods.iter().map(|m| m.label().to_string()).collect()));
        let _ = writeln!(s, "m0 = {}", join(self.m0_schedule().iter().map(usize::to_string).collect()));
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "B = {}", self.replicates);
        let _ = writeln!(s, "intervals = {}", self.intervals);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        let _ = writeln!(s, "l_min = {}", self.l_min);
        let _ = writeln!(s, "max_lag = {}", self.max_lag);
        let _ = writeln!(s, "reps = {}", self.reps);
        let _ = writeln!(s, "sim_n = {}", self.sim_n);
        let _ = writeln!(s, "levels = {}", join(self.levels.iter().map(usize::to_string).collect()));
        let mode = match self.contamination_mode {
            ContaminationMode::None => "none",
            ContaminationMode::Scores => "scores",
            ContaminationMode::Curves => "curves",
        };
        let _ = writeln!(s, "contamination_mode = {mode}");
        let _ = writeln!(s, "sim_methods = {}", join(self.sim_methods.iter().map(SimMethod::label).collect()));
        s
    }

    pub fn m0_schedule(&self) -> Vec<usize> {
        if self.m0.is_empty() {
            vec![((7 * self.p) as f64 / 12.0).round() as usize]
        } else {
            self.m0.clone()
        }
    }

    pub fn variant(&self) -> FpcaVariant {
        if self.robust {
            FpcaVariant::Robust(RobustConfig {
                lambda: self.lambda,
                ..Default::default()
            })
        } else {
            FpcaVariant::Standard
        }
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::Fraction(self.delta)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::equispaced(self.p, self.support_start, self.support_end)
    }

    fn bootstrap(&self, origin: usize) -> BootstrapConfig {
        BootstrapConfig {
            alpha: self.alpha,
            replicates: self.replicates,
            seed: rng::derive_seed(self.seed, origin as u64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::invalid("p must be at least 2"));
        }
        if !(self.support_end > self.support_start) {
            return Err(Error::invalid("support end must exceed support start"));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!("delta = {} outside (0, 1]", self.delta)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.q == 0 {
            return Err(Error::invalid("holdout length q must be positive"));
        }
        if self.intervals {
            self.bootstrap(0).validate()?;
        }
        if let Some(m0) = self.m0_schedule().iter().find(|&&m| m == 0 || m >= self.p) {
            return Err(Error::invalid(format!("m0 = {m0} outside 1..{}", self.p)));
        }
        Ok(())
    }

    fn check_length(&self, n: usize) -> Result<()> {
        let needed = self.q + if self.intervals { self.l_min + 1 } else { 3 };
        if n < needed {
            return Err(Error::invalid(format!(
                "{n} curves cannot support a holdout of q = {} (at least {needed} needed)",
                self.q
            )));
        }
        Ok(())
    }

    pub fn study(&self) -> StudyConfig {
        StudyConfig {
            reps: self.reps,
            n: self.sim_n,
            levels: self.levels.clone(),
            mode: self.contamination_mode,
            methods: self.sim_methods.clone(),
            delta: self.delta,
            seed: self.seed,
            ..Default::default()
        }
    }
}

/// Files written by a run; removed on drop unless the run completed.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    done: bool,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            done: false,
        })
    }

    fn file(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        path
    }

    fn finish(mut self) -> Vec<PathBuf> {
        self.done = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.done {
            for path in &self.written {
                let _ = std::fs::remove_file(path);
            }
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create_file(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Read and segment the configured input; returns the curves on the original
/// scale and on the modelling scale.
pub fn load_curves(cfg: &RunConfig) -> Result<(FunctionalTimeSeries, FunctionalTimeSeries)> {
    let input = cfg.input.as_ref().ok_or_else(|| Error::invalid("no input file configured"))?;
    let series = ingest_series(input)?;
    let raw = segment(&series, &cfg.grid()?)?;
    let model = if cfg.sqrt { raw.sqrt_transform()? } else { raw.clone() };
    Ok((raw, model))
}

fn back(cfg: &RunConfig, v: Vec<f64>) -> Vec<f64> {
    if cfg.sqrt {
        v.into_iter().map(|x| x.max(0.0).powi(2)).collect()
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
struct DayForecast {
    point: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DayForecast {
    fn point_only(point: Vec<f64>) -> Self {
        DayForecast {
            lower: point.clone(),
            upper: point.clone(),
            point,
        }
    }
}

fn rows_matrix(rows: &[&Vec<f64>]) -> DMatrix<f64> {
    let p = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

fn score(label: String, days: &[DayForecast], actuals: &[Vec<f64>], cfg: &RunConfig) -> Result<AccuracyReport> {
    let actual = rows_matrix(&actuals.iter().collect::<Vec<_>>());
    let point = rows_matrix(&days.iter().map(|d| &d.point).collect::<Vec<_>>());
    let report = mafe_msfe(label, &actual, &point)?;
    if !cfg.intervals {
        return Ok(report);
    }
    let lower = rows_matrix(&days.iter().map(|d| &d.lower).collect::<Vec<_>>());
    let upper = rows_matrix(&days.iter().map(|d| &d.upper).collect::<Vec<_>>());
    report.with_intervals(mean_interval_score(&lower, &upper, &actual, cfg.alpha)?, cfg.alpha)
}

fn ts_day(cfg: &RunConfig, data: &FunctionalTimeSeries, origin: usize, support: Support) -> Result<DayForecast> {
    let model = cfg.variant().fit(&data.head(origin), cfg.truncation())?;
    let beta = cfg.forecaster.forecast_one(model.scores())?;
    let point = ts_forecast_curve(&model, &beta, support)?;
    if !cfg.intervals {
        return Ok(DayForecast::point_only(back(cfg, point)));
    }
    let errors = insample_score_errors(model.scores(), &cfg.forecaster, cfg.l_min)?;
    let pi = bootstrap_pointwise_pi(&model, &beta, &errors, support, &cfg.bootstrap(origin), false)?;
    Ok(DayForecast {
        point: back(cfg, point),
        lower: back(cfg, pi.lower),
        upper: back(cfg, pi.upper),
    })
}

#[derive(Debug, Clone)]
pub struct ForecastRun {
    pub report: AccuracyReport,
    pub files: Vec<PathBuf>,
}

/// One-step-ahead forecasts of each of the last `q` curves from all curves
/// before it, scored against the actual curves.
pub fn run_forecast(cfg: &RunConfig) -> Result<ForecastRun> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let (raw, data) = load_curves(cfg).map_err(|e| e.in_stage("ingest"))?;
    let n = raw.n();
    cfg.check_length(n).map_err(|e| e.in_stage("config"))?;
    let mut out = Outputs::new(&cfg.out_dir)?;
    write_text(&out.file("run_config.txt"), &cfg.to_kv())?;

    let first = n - cfg.q;
    let days = par::try_map_range(cfg.q, |d| {
        ts_day(cfg, &data, first + d, Support::Full).map_err(|e| e.in_replicate(first + d))
    })
    .map_err(|e| e.in_stage("forecast"))?;
    let actuals: Vec<Vec<f64>> = (first..n).map(|i| raw.curve(i)).collect();
    let label = format!("{}_{}", cfg.variant().label(), cfg.forecaster.label());
    let report = score(label, &days, &actuals, cfg).map_err(|e| e.in_stage("evaluate"))?;

    report.write_json(out.file("report.json"))?;
    write_tidy_csv(out.file("accuracy.csv"), &[(&report, 1)])?;
    let points = rows_matrix(&days.iter().map(|d| &d.point).collect::<Vec<_>>());
    write_matrix_csv(out.file("forecasts.csv"), &points)?;
    if cfg.intervals {
        write_intervals(&out.file("intervals.csv"), raw.grid(), first, &days, 1.0 - cfg.alpha)?;
    }

    let model = cfg.variant().fit(&data, cfg.truncation()).map_err(|e| e.in_stage("fpca"))?;
    std::fs::write(out.file("fpca.json"), serde_json::to_string_pretty(&model.to_json(false))?).map_err(|source| {
        Error::Io {
            path: cfg.out_dir.join("fpca.json"),
            source,
        }
    })?;
    let residuals = FunctionalTimeSeries::new(data.grid().clone(), model.residuals().clone())?;
    let acf = functional_acf(&residuals, cfg.max_lag.min(n - 1)).map_err(|e| e.in_stage("acf"))?;
    write_json(out.file("acf.json"), &acf)?;

    if cfg.intervals && n > cfg.l_min + MIN_BAND_CURVES {
        let beta = cfg.forecaster.forecast_one(model.scores()).map_err(|e| e.in_stage("band"))?;
        let point = model.curve_from_scores(&beta)?;
        let errors = insample_score_errors(model.scores(), &cfg.forecaster, cfg.l_min)
            .and_then(|e| insample_curve_errors(&model, &e))
            .map_err(|e| e.in_stage("band"))?;
        let mut band = prediction_band(&point, &errors, 1.0 - cfg.alpha).map_err(|e| e.in_stage("band"))?;
        band.point = back(cfg, band.point);
        band.lower = back(cfg, band.lower);
        band.upper = back(cfg, band.upper);
        band.write_csv(out.file("band.csv"), &data.grid().points)?;
    }
    Ok(ForecastRun {
        report,
        files: out.finish(),
    })
}

const MIN_BAND_CURVES: usize = crate::uncertainty::MIN_BAND_RESIDUALS;

fn write_intervals(path: &Path, grid: &Grid, first: usize, days: &[DayForecast], level: f64) -> Result<()> {
    let mut w = create_file(path)?;
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    writeln!(w, "day,t,point,lower,upper,level").map_err(io)?;
    let offset = grid.p() - days.first().map_or(0, |d| d.point.len());
    for (d, day) in days.iter().enumerate() {
        for j in 0..day.point.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                first + d,
                grid.points[offset + j],
                day.point[j],
                day.lower[j],
                day.upper[j],
                level
            )
            .map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn update_day(
    cfg: &RunConfig,
    data: &FunctionalTimeSeries,
    origin: usize,
    m0: usize,
    method: UpdateMethod,
) -> Result<DayForecast> {
    let history = data.head(origin);
    let today = data.curve(origin);
    let partial = PartialCurve::new(data.grid().clone(), today[..m0].to_vec())?;
    let boot = cfg.bootstrap(origin * cfg.p + m0);
    match method {
        UpdateMethod::Ts => ts_day(cfg, data, origin, Support::Remaining(m0)),
        UpdateMethod::Bm => {
            let rotated = bm_rotate(&history, &partial)?;
            let f = bm_forecast(&rotated, cfg.truncation(), &cfg.variant(), &cfg.forecaster)?;
            if !cfg.intervals {
                return Ok(DayForecast::point_only(back(cfg, f.remaining)));
            }
            let errors = insample_score_errors(f.model.scores(), &cfg.forecaster, cfg.l_min)?;
            let pi = bootstrap_pointwise_pi(&f.model, &f.scores, &errors, Support::Leading(cfg.p - m0), &boot, false)?;
            Ok(DayForecast {
                point: back(cfg, f.remaining),
                lower: back(cfg, pi.lower),
                upper: back(cfg, pi.upper),
            })
        }
        UpdateMethod::Flr => {
            if !cfg.intervals {
                let model = flr_fit(&history, m0, cfg.truncation(), &cfg.variant())?;
                let point = flr_predict(&model, &partial)?;
                return Ok(DayForecast::point_only(back(cfg, point)));
            }
            let pi = flr_bootstrap_pi(&history, &partial, cfg.truncation(), &cfg.variant(), &boot)?;
            Ok(DayForecast {
                point: back(cfg, pi.point),
                lower: back(cfg, pi.lower),
                upper: back(cfg, pi.upper),
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct UpdateRun {
    /// One report per (m0, method), covering grid points `m0 + 1..=p`.
    pub reports: Vec<(usize, AccuracyReport)>,
    pub files: Vec<PathBuf>,
}

/// For each holdout day and each `m0`, forecast the rest of the day from the
/// previous days and the first `m0` observations.
pub fn run_update(cfg: &RunConfig) -> Result<UpdateRun> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    if cfg.update_methods.is_empty() {
        return Err(Error::invalid("no update methods configured").in_stage("config"));
    }
    let (raw, data) = load_curves(cfg).map_err(|e| e.in_stage("ingest"))?;
    let n = raw.n();
    cfg.check_length(n).map_err(|e| e.in_stage("config"))?;
    let mut out = Outputs::new(&cfg.out_dir)?;
    write_text(&out.file("run_config.txt"), &cfg.to_kv())?;

    let first = n - cfg.q;
    let mut reports = Vec::new();
    let mut all_days = Vec::new();
    for m0 in cfg.m0_schedule() {
        for &method in &cfg.update_methods {
            let days = par::try_map_range(cfg.q, |d| {
                update_day(cfg, &data, first + d, m0, method).map_err(|e| e.in_replicate(first + d))
            })
            .map_err(|e| e.in_stage(method.label()))?;
            let actuals: Vec<Vec<f64>> = (first..n).map(|i| raw.curve(i)[m0..].to_vec()).collect();
            let label = format!("{}_{}_m0_{m0}", method.label(), cfg.forecaster.label());
            let label = if method == UpdateMethod::Flr {
                format!("flr_m0_{m0}")
            } else {
                label
            };
            let report = score(label, &days, &actuals, cfg).map_err(|e| e.in_stage("evaluate"))?;
            all_days.push((m0, report.method.clone(), days, actuals));
            reports.push((m0, report));
        }
    }

    write_json(out.file("update_report.json"), &reports.iter().map(|(_, r)| r).collect::<Vec<_>>())?;
    let tidy: Vec<(&AccuracyReport, usize)> = reports.iter().map(|(m0, r)| (r, m0 + 1)).collect();
    write_tidy_csv(out.file("update_accuracy.csv"), &tidy)?;

    let path = out.file("update_forecasts.csv");
    let mut w = create_file(&path)?;
    let io = |source| Error::Io {
        path: path.clone(),
        source,
    };
    writeln!(w, "m0,method,day,j,point,lower,upper,actual").map_err(io)?;
    for (m0, label, days, actuals) in &all_days {
        for (d, (day, actual)) in days.iter().zip(actuals).enumerate() {
            for k in 0..day.point.len() {
                writeln!(
                    w,
                    "{m0},{label},{},{},{},{},{},{}",
                    first + d,
                    m0 + k + 1,
                    day.point[k],
                    day.lower[k],
                    day.upper[k],
                    actual[k]
                )
                .map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)?;
    drop(w);
    Ok(UpdateRun {
        reports,
        files: out.finish(),
    })
}

#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub table: StudyTable,
    pub files: Vec<PathBuf>,
}

pub fn run_simulation(cfg: &RunConfig) -> Result<SimulationRun> {
    let study = cfg.study();
    study.validate().map_err(|e| e.in_stage("config"))?;
    let mut out = Outputs::new(&cfg.out_dir)?;
    write_text(&out.file("run_config.txt"), &cfg.to_kv())?;
    let table = replication_study(&study).map_err(|e| e.in_stage("simulate"))?;
    table.write_csv(out.file("sim_table.csv"))?;
    write_json(out.file("sim_cells.json"), &table)?;
    Ok(SimulationRun {
        table,
        files: out.finish(),
    })
}
