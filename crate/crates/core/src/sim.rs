//! Simulation study: VAR(2) scores on a sine/cosine basis, optional
//! contamination, and replicated one-step forecasts scored against a held-out
//! curve.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{create_file, FunctionalTimeSeries, Grid};
use crate::error::{Error, Result};
use crate::fpca::{FpcaVariant, RobustConfig, Truncation};
use crate::linalg::median;
use crate::rng::{self, Rng};
use crate::scorecast::Forecaster;
use crate::par;

pub const DEFAULT_BURN_IN: usize = 200;
pub const GRID_POINTS: usize = 51;
pub const OFFSET: f64 = 10.0;
pub const DEFAULT_LEVELS: [usize; 10] = [0, 1, 2, 3, 4, 5, 10, 15, 20, 25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Var2Spec {
    pub intercept: [f64; 2],
    pub b1: [[f64; 2]; 2],
    pub b2: [[f64; 2]; 2],
    pub sigma: [[f64; 2]; 2],
    pub n: usize,
    pub burn_in: usize,
}

impl Default for Var2Spec {
    fn default() -> Self {
        Var2Spec {
            intercept: [10.0, 5.0],
            b1: [[0.5, 0.2], [-0.2, -0.5]],
            b2: [[-0.3, -0.7], [-0.1, 0.3]],
            sigma: [[1.0, 0.2], [0.2, 1.0]],
            n: 501,
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

impl Var2Spec {
    pub fn companion(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                c[(i, j)] = self.b1[i][j];
                c[(i, j + 2)] = self.b2[i][j];
            }
        }
        c[(2, 0)] = 1.0;
        c[(3, 1)] = 1.0;
        c
    }

    pub fn spectral_radius(&self) -> f64 {
        self.companion()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `(I - B1 - B2)^-1 B0`.
    pub fn stationary_mean(&self) -> [f64; 2] {
        let a = [
            [1.0 - self.b1[0][0] - self.b2[0][0], -self.b1[0][1] - self.b2[0][1]],
            [-self.b1[1][0] - self.b2[1][0], 1.0 - self.b1[1][1] - self.b2[1][1]],
        ];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let b = self.intercept;
        [
            (a[1][1] * b[0] - a[0][1] * b[1]) / det,
            (a[0][0] * b[1] - a[1][0] * b[0]) / det,
        ]
    }

    /// Lower Cholesky factor of the innovation covariance.
    pub fn sigma_factor(&self) -> Result<[[f64; 2]; 2]> {
        let s = self.sigma;
        if s[0][1] != s[1][0] || !(s[0][0] > 0.0) {
            return Err(Error::invalid("innovation covariance must be symmetric positive definite"));
        }
        let l00 = s[0][0].sqrt();
        let l10 = s[1][0] / l00;
        let rest = s[1][1] - l10 * l10;
        if !(rest > 0.0) {
            return Err(Error::invalid("innovation covariance must be symmetric positive definite"));
        }
        Ok([[l00, 0.0], [l10, rest.sqrt()]])
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("simulated length must be positive"));
        }
        self.sigma_factor()?;
        let r = self.spectral_radius();
        if !(r < 1.0) {
            return Err(Error::NonStationary(r));
        }
        Ok(())
    }
}

/// `n x 2` scores from the VAR(2) recursion after discarding the burn-in.
pub fn simulate_var2(spec: &Var2Spec, seed: u64) -> Result<DMatrix<f64>> {
    simulate_var2_with(spec, &mut rng::rng(seed))
}

pub fn simulate_var2_with(spec: &Var2Spec, rng: &mut Rng) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let l = spec.sigma_factor()?;
    let mut prev = [0.0; 2];
    let mut prev2 = [0.0; 2];
    let mut out = DMatrix::zeros(spec.n, 2);
    for step in 0..spec.burn_in + spec.n {
        let z: [f64; 2] = [StandardNormal.sample(rng), StandardNormal.sample(rng)];
        let e = [l[0][0] * z[0], l[1][0] * z[0] + l[1][1] * z[1]];
        let mut y = [0.0; 2];
        for i in 0..2 {
            y[i] = spec.intercept[i]
                + spec.b1[i][0] * prev[0]
                + spec.b1[i][1] * prev[1]
                + spec.b2[i][0] * prev2[0]
                + spec.b2[i][1] * prev2[1]
                + e[i];
        }
        prev2 = prev;
        prev = y;
        if step >= spec.burn_in {
            out[(step - spec.burn_in, 0)] = y[0];
            out[(step - spec.burn_in, 1)] = y[1];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ContaminationMode {
    None,
    #[default]
    Scores,
    Curves,
}

impl std::str::FromStr for ContaminationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "scores" => Ok(Self::Scores),
            "curves" => Ok(Self::Curves),
            other => Err(Error::invalid(format!("unknown contamination mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub mode: ContaminationMode,
    pub count: usize,
    pub offset: f64,
}

impl ContaminationSpec {
    pub fn none() -> Self {
        ContaminationSpec {
            mode: ContaminationMode::None,
            count: 0,
            offset: OFFSET,
        }
    }

    pub fn new(mode: ContaminationMode, count: usize) -> Self {
        ContaminationSpec {
            mode,
            count,
            offset: OFFSET,
        }
    }
}

/// `linspace(-1, 1, 51)`.
pub fn sim_grid() -> Grid {
    let step = 2.0 / (GRID_POINTS - 1) as f64;
    let points = (0..GRID_POINTS).map(|j| -1.0 + j as f64 * step).collect();
    Grid::with_points(points, step).expect("valid grid")
}

/// Curves `beta_1 sin(2 pi t) + beta_2 cos(2 pi t)` with `count` randomly
/// chosen rows contaminated before (scores mode) or after (curves mode)
/// synthesis. Returns the curves and the contaminated row indices.
pub fn synthesize_curves(
    scores: &DMatrix<f64>,
    contamination: &ContaminationSpec,
    rng: &mut Rng,
) -> Result<(FunctionalTimeSeries, Vec<usize>)> {
    if scores.ncols() != 2 {
        return Err(Error::shape("2 score columns", scores.ncols()));
    }
    let n = scores.nrows();
    let rows = match contamination.mode {
        ContaminationMode::None => Vec::new(),
        _ if contamination.count > n => {
            return Err(Error::invalid(format!(
                "{} outliers requested among {n} curves",
                contamination.count
            )))
        }
        _ => {
            let mut r = sample(rng, n, contamination.count).into_vec();
            r.sort_unstable();
            r
        }
    };
    let mut beta = scores.clone();
    if contamination.mode == ContaminationMode::Scores {
        for &i in &rows {
            beta[(i, 0)] += contamination.offset;
            beta[(i, 1)] += contamination.offset;
        }
    }
    let grid = sim_grid();
    let tau = std::f64::consts::TAU;
    let basis: Vec<(f64, f64)> = grid.points.iter().map(|t| ((tau * t).sin(), (tau * t).cos())).collect();
    let mut curves = DMatrix::from_fn(n, GRID_POINTS, |i, j| beta[(i, 0)] * basis[j].0 + beta[(i, 1)] * basis[j].1);
    if contamination.mode == ContaminationMode::Curves {
        for &i in &rows {
            curves.row_mut(i).add_scalar_mut(contamination.offset);
        }
    }
    Ok((FunctionalTimeSeries::new(grid, curves)?, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimMethod {
    pub robust: bool,
    pub forecaster: Forecaster,
}

impl SimMethod {
    pub fn label(&self) -> String {
        format!("{}_{}", if self.robust { "robust" } else { "standard" }, self.forecaster.label())
    }

    fn variant(&self) -> FpcaVariant {
        if self.robust {
            FpcaVariant::Robust(RobustConfig::default())
        } else {
            FpcaVariant::Standard
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub reps: usize,
    /// Training curves; one more is simulated and held out.
    pub n: usize,
    pub levels: Vec<usize>,
    pub mode: ContaminationMode,
    pub methods: Vec<SimMethod>,
    pub delta: f64,
    pub seed: u64,
    pub var: Var2Spec,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            reps: 1000,
            n: 500,
            levels: DEFAULT_LEVELS.to_vec(),
            mode: ContaminationMode::Scores,
            methods: vec![
                SimMethod {
                    robust: false,
                    forecaster: Forecaster::var(),
                },
                SimMethod {
                    robust: true,
                    forecaster: Forecaster::var(),
                },
            ],
            delta: 0.9,
            seed: 1,
            var: Var2Spec::default(),
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::invalid("at least one replication required"));
        }
        if self.methods.is_empty() || self.levels.is_empty() {
            return Err(Error::invalid("study needs at least one method and one contamination level"));
        }
        if let Some(m) = self.levels.iter().find(|&&m| m > self.n) {
            return Err(Error::invalid(format!("{m} outliers exceed n = {}", self.n)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!("delta = {} outside (0, 1]", self.delta)));
        }
        let spec = Var2Spec {
            n: self.n + 1,
            ..self.var.clone()
        };
        spec.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub level: usize,
    pub method: String,
    pub median_mafe: f64,
    pub median_msfe: f64,
    pub mean_mafe: f64,
    pub mean_msfe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub reps: usize,
    pub mode: ContaminationMode,
    pub levels: Vec<usize>,
    pub methods: Vec<String>,
    pub cells: Vec<StudyCell>,
    /// `[rep][level][method] = (mafe, msfe)`.
    #[serde(skip)]
    pub raw: Vec<Vec<Vec<(f64, f64)>>>,
}

impl StudyTable {
    pub fn cell(&self, level: usize, method: &str) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.level == level && c.method == method)
    }

    /// Rows = contamination levels; columns = method x metric medians.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = create_file(path)?;
        let io = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let mut header = vec!["outliers".to_string()];
        for m in &self.methods {
            header.push(format!("{m}_mafe"));
            header.push(format!("{m}_msfe"));
        }
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for &level in &self.levels {
            let mut row = vec![level.to_string()];
            for m in &self.methods {
                let c = self.cell(level, m).expect("cell per level and method");
                row.push(format!("{:.4}", c.median_mafe));
                row.push(format!("{:.4}", c.median_msfe));
            }
            writeln!(w, "{}", row.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

fn one_replication(cfg: &StudyConfig, rep: usize) -> Result<Vec<Vec<(f64, f64)>>> {
    let seed = rng::derive_seed(cfg.seed, rep as u64);
    let spec = Var2Spec {
        n: cfg.n + 1,
        ..cfg.var.clone()
    };
    let scores = simulate_var2_with(&spec, &mut rng::rng_for(seed, 0))?;
    let train_scores = scores.rows(0, cfg.n).into_owned();
    let test_scores = scores.rows(cfg.n, 1).into_owned();
    let (test, _) = synthesize_curves(&test_scores, &ContaminationSpec::none(), &mut rng::rng(0))?;
    let actual = test.curve(0);
    cfg.levels
        .iter()
        .enumerate()
        .map(|(li, &level)| {
            let spec = ContaminationSpec::new(if level == 0 { ContaminationMode::None } else { cfg.mode }, level);
            let (train, _) = synthesize_curves(&train_scores, &spec, &mut rng::rng_for(seed, 1 + li as u64))?;
            cfg.methods
                .iter()
                .map(|m| {
                    let model = m.variant().fit(&train, Truncation::Fraction(cfg.delta))?;
                    let beta = m.forecaster.forecast_one(model.scores())?;
                    let f = model.curve_from_scores(&beta)?;
                    let p = f.len() as f64;
                    let mafe = f.iter().zip(&actual).map(|(a, b)| (a - b).abs()).sum::<f64>() / p;
                    let msfe = f.iter().zip(&actual).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / p;
                    Ok((mafe, msfe))
                })
                .collect()
        })
        .collect()
}

/// Replicated one-step forecasts of the held-out curve for every
/// contamination level and method. Within a replication all cells share the
/// simulated scores, and all methods at a level share the contaminated rows.
pub fn replication_study(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let raw = par::try_map_range(cfg.reps, |r| one_replication(cfg, r).map_err(|e| e.in_replicate(r)))?;
    let methods: Vec<String> = cfg.methods.iter().map(SimMethod::label).collect();
    let mut cells = Vec::new();
    for (li, &level) in cfg.levels.iter().enumerate() {
        for (mi, label) in methods.iter().enumerate() {
            let mafe: Vec<f64> = raw.iter().map(|r| r[li][mi].0).collect();
            let msfe: Vec<f64> = raw.iter().map(|r| r[li][mi].1).collect();
            cells.push(StudyCell {
                level,
                method: label.clone(),
                median_mafe: median(&mafe),
                median_msfe: median(&msfe),
                mean_mafe: mafe.iter().sum::<f64>() / mafe.len() as f64,
                mean_msfe: msfe.iter().sum::<f64>() / msfe.len() as f64,
            });
        }
    }
    Ok(StudyTable {
        reps: cfg.reps,
        mode: cfg.mode,
        levels: cfg.levels.clone(),
        methods,
        cells,
        raw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_reproduces_sigma() {
        let spec = Var2Spec::default();
        let l = spec.sigma_factor().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let v = l[i][0] * l[j][0] + l[i][1] * l[j][1];
                assert!((v - spec.sigma[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn non_stationary_rejected() {
        let spec = Var2Spec {
            b1: [[1.1, 0.0], [0.0, 0.5]],
            b2: [[0.0; 2]; 2],
            ..Default::default()
        };
        assert!(matches!(simulate_var2(&spec, 1), Err(Error::NonStationary(_))));
    }

    #[test]
    fn grid_and_basis() {
        let g = sim_grid();
        assert_eq!(g.p(), 51);
        assert!((g.points[50] - 1.0).abs() < 1e-12);
        let s = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let (c, _) = synthesize_curves(&s, &ContaminationSpec::none(), &mut rng::rng(1)).unwrap();
        assert!(c.curve(0).iter().all(|v| *v == 0.0));
        for (v, t) in c.curve(1).iter().zip(&g.points) {
            assert!((v - (std::f64::consts::TAU * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn curve_contamination_shifts_mean() {
        let s = DMatrix::from_fn(8, 2, |i, j| (i + j) as f64);
        let (clean, _) = synthesize_curves(&s, &ContaminationSpec::none(), &mut rng::rng(1)).unwrap();
        let spec = ContaminationSpec::new(ContaminationMode::Curves, 3);
        let (dirty, rows) = synthesize_curves(&s, &spec, &mut rng::rng(2)).unwrap();
        assert_eq!(rows.len(), 3);
        for i in 0..8 {
            let d: f64 = dirty.curve(i).iter().zip(clean.curve(i)).map(|(a, b)| a - b).sum::<f64>() / 51.0;
            let want = if rows.contains(&i) { 10.0 } else { 0.0 };
            assert!((d - want).abs() < 1e-12);
        }
        let too_many = ContaminationSpec::new(ContaminationMode::Scores, 9);
        assert!(synthesize_curves(&s, &too_many, &mut rng::rng(2)).is_err());
    }

    #[test]
    fn study_is_deterministic() {
        let cfg = StudyConfig {
            reps: 3,
            n: 60,
            levels: vec![0, 5],
            ..Default::default()
        };
        let a = replication_study(&cfg).unwrap();
        let b = par::sequential(|| replication_study(&cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 4);
        let bad = StudyConfig {
            levels: vec![61],
            ..cfg
        };
        assert!(replication_study(&bad).is_err());
    }
}
