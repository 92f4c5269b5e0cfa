//! Functional principal component analysis on a uniform grid.
//!
//! The covariance operator is discretized as `C * dt`, where `C` is the
//! sample covariance matrix (divisor `n`). Its eigenvectors, rescaled by
//! `1 / sqrt(dt)`, are orthonormal under the grid inner product, so
//! eigenvalues, scores and residuals satisfy the Karhunen-Loeve identities
//! exactly at grid level.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{FunctionalTimeSeries, Grid};
use crate::error::{Error, Result};
use crate::linalg::{median, sym_eigen_desc};

/// How many components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Truncation {
    /// Smallest K whose cumulative explained variance reaches the fraction.
    Fraction(f64),
    /// Exactly K components (capped at p).
    Fixed(usize),
}

impl Truncation {
    fn validate(self) -> Result<Self> {
        match self {
            Truncation::Fraction(d) if !(d > 0.0 && d <= 1.0) => {
                Err(Error::invalid(format!("explained-variance fraction must lie in (0, 1], got {d}")))
            }
            t => Ok(t),
        }
    }

    fn choose(self, eigenvalues: &[f64]) -> usize {
        match self {
            Truncation::Fraction(d) => select_k(eigenvalues, d),
            Truncation::Fixed(k) => k.min(eigenvalues.len()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialEstimator {
    /// PCA of the curves centered at the L1-median and projected onto the
    /// unit sphere.
    Spherical,
    /// Ordinary FPCA.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustConfig {
    /// Outlier threshold multiplier: curve i is kept when
    /// `v_i < median(v) + lambda * sqrt(median(v))`.
    pub lambda: f64,
    pub initial: InitialEstimator,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            lambda: 2.33,
            initial: InitialEstimator::Spherical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum FpcaVariant {
    #[default]
    Standard,
    Robust(RobustConfig),
}

impl FpcaVariant {
    pub fn fit(&self, fts: &FunctionalTimeSeries, trunc: Truncation) -> Result<FpcaModel> {
        match self {
            FpcaVariant::Standard => empirical_fpca(fts, trunc),
            FpcaVariant::Robust(cfg) => robust_fpca(fts, trunc, cfg),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FpcaVariant::Standard => "fpca",
            FpcaVariant::Robust(_) => "robust-fpca",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpcaModel {
    grid: Grid,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    /// p x K, column k is the k-th eigenfunction on the grid.
    eigenfunctions: DMatrix<f64>,
    /// n x K
    scores: DMatrix<f64>,
    /// n x p truncation remainders.
    residuals: DMatrix<f64>,
    weights: Vec<f64>,
}

/// Smallest K with `sum_{k<=K} lambda_k / sum_{lambda_k > 0} lambda_k >= delta`.
/// Eigenvalues below `1e-12 * max` count as zero; no positive eigenvalue
/// gives K = 0.
pub fn select_k(eigenvalues: &[f64], delta: f64) -> usize {
    let max = eigenvalues.iter().copied().fold(0.0_f64, f64::max);
    if !(max > 0.0) {
        return 0;
    }
    let floor = 1e-12 * max;
    let positive: Vec<f64> = eigenvalues.iter().copied().filter(|&l| l > floor).collect();
    let total: f64 = positive.iter().sum();
    let mut cum = 0.0;
    for (k, l) in positive.iter().enumerate() {
        cum += l;
        if cum / total >= delta - 1e-12 {
            return k + 1;
        }
    }
    positive.len()
}

/// Standard FPCA over all curves.
pub fn empirical_fpca(fts: &FunctionalTimeSeries, trunc: Truncation) -> Result<FpcaModel> {
    if fts.n() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: fts.n(),
        });
    }
    let trunc = trunc.validate()?;
    Ok(decompose(fts, &vec![1.0; fts.n()], trunc))
}

/// Two-step robust FPCA: flag outlying curves by their integrated squared
/// reconstruction error under a robust initial fit, then run standard FPCA on
/// the retained curves. Scores and residuals cover every curve.
pub fn robust_fpca(
    fts: &FunctionalTimeSeries,
    trunc: Truncation,
    cfg: &RobustConfig,
) -> Result<FpcaModel> {
    if fts.n() < 3 {
        return Err(Error::TooShort {
            needed: 3,
            got: fts.n(),
        });
    }
    if !(cfg.lambda > 0.0) {
        return Err(Error::invalid("robust lambda must be positive"));
    }
    let trunc = trunc.validate()?;
    let v = initial_fit_errors(fts, trunc, cfg.initial);
    let weights = outlier_weights(&v, cfg.lambda);
    let retained = weights.iter().filter(|&&w| w > 0.0).count();
    if retained < 2 {
        return Err(Error::RobustDegenerate { retained });
    }
    Ok(decompose(fts, &weights, trunc))
}

/// Binary weights: 1 when `v_i` is below `s + lambda * sqrt(s)` with `s` the
/// median of `v`. Curves with `v_i == 0` are always kept, which only matters
/// when the median itself is zero.
pub fn outlier_weights(v: &[f64], lambda: f64) -> Vec<f64> {
    let s = median(v);
    let threshold = s + lambda * s.max(0.0).sqrt();
    v.iter()
        .map(|&vi| if vi < threshold || vi == 0.0 { 1.0 } else { 0.0 })
        .collect()
}

/// Integrated squared error of each curve against the initial K-term fit.
pub fn initial_fit_errors(
    fts: &FunctionalTimeSeries,
    trunc: Truncation,
    initial: InitialEstimator,
) -> Vec<f64> {
    let grid = fts.grid();
    match initial {
        InitialEstimator::Standard => {
            let model = decompose(fts, &vec![1.0; fts.n()], trunc);
            model
                .residuals
                .row_iter()
                .map(|r| grid.norm_sq(r.clone_owned().as_slice()))
                .collect()
        }
        InitialEstimator::Spherical => {
            let x = fts.curves();
            let (n, p) = x.shape();
            let center = l1_median(x, 1e-10, 500);
            let centered = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - center[j]);
            let mut sphere = centered.clone();
            for mut row in sphere.row_iter_mut() {
                let norm = (grid.dt * row.norm_squared()).sqrt();
                if norm > 0.0 {
                    row /= norm;
                }
            }
            let cov = sphere.transpose() * &sphere * (grid.dt / n as f64);
            let (vals, vecs) = sym_eigen_desc(cov);
            let vals: Vec<f64> = vals.into_iter().map(|l| l.max(0.0)).collect();
            let k = trunc.choose(&vals);
            let basis = vecs.columns(0, k).into_owned();
            // Project with the Euclidean-orthonormal basis; the grid weight
            // cancels in the projection.
            let fitted = &centered * &basis * basis.transpose();
            (&centered - fitted)
                .row_iter()
                .map(|r| grid.dt * r.norm_squared())
                .collect()
        }
    }
}

/// Spatial (L1) median of the rows by Weiszfeld iteration, started from the
/// coordinatewise median.
pub fn l1_median(x: &DMatrix<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut m: Vec<f64> = (0..p)
        .map(|j| median(&x.column(j).iter().copied().collect::<Vec<_>>()))
        .collect();
    for _ in 0..max_iter {
        let mut num = vec![0.0; p];
        let mut den = 0.0;
        for i in 0..n {
            let d = (0..p).map(|j| (x[(i, j)] - m[j]).powi(2)).sum::<f64>().sqrt();
            if d < 1e-12 {
                continue;
            }
            let w = 1.0 / d;
            den += w;
            for j in 0..p {
                num[j] += w * x[(i, j)];
            }
        }
        if den == 0.0 {
            break;
        }
        let next: Vec<f64> = num.iter().map(|v| v / den).collect();
        let step = next.iter().zip(&m).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = m.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        m = next;
        if step <= tol * scale {
            break;
        }
    }
    m
}

fn decompose(fts: &FunctionalTimeSeries, weights: &[f64], trunc: Truncation) -> FpcaModel {
    let grid = fts.grid().clone();
    let x = fts.curves();
    let (n, p) = x.shape();
    let kept: Vec<usize> = (0..n).filter(|&i| weights[i] > 0.0).collect();
    let m = kept.len() as f64;
    let mean: Vec<f64> = (0..p)
        .map(|j| kept.iter().map(|&i| x[(i, j)]).sum::<f64>() / m)
        .collect();
    let centered_all = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - mean[j]);
    let centered_kept = DMatrix::from_fn(kept.len(), p, |r, j| centered_all[(kept[r], j)]);
    let cov = centered_kept.transpose() * &centered_kept * (grid.dt / m);
    let (vals, vecs) = sym_eigen_desc(cov);
    let eigenvalues: Vec<f64> = vals.into_iter().map(|l| l.max(0.0)).collect();
    let k = trunc.choose(&eigenvalues);
    let eigenfunctions = vecs.columns(0, k) / grid.dt.sqrt();
    let scores = &centered_all * &eigenfunctions * grid.dt;
    let residuals = &centered_all - &scores * eigenfunctions.transpose();
    FpcaModel {
        grid,
        mean,
        eigenvalues,
        eigenfunctions,
        scores,
        residuals,
        weights: weights.to_vec(),
    }
}

impl FpcaModel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// All p eigenvalues, nonincreasing, negatives clamped to zero.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, k: usize) -> Vec<f64> {
        self.eigenfunctions.column(k).iter().copied().collect()
    }

    pub fn k(&self) -> usize {
        self.eigenfunctions.ncols()
    }

    pub fn n(&self) -> usize {
        self.scores.nrows()
    }

    pub fn scores(&self) -> &DMatrix<f64> {
        &self.scores
    }

    pub fn residuals(&self) -> &DMatrix<f64> {
        &self.residuals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Scores of an arbitrary curve on this basis.
    pub fn project(&self, curve: &[f64]) -> Result<Vec<f64>> {
        if curve.len() != self.grid.p() {
            return Err(Error::shape(self.grid.p(), curve.len()));
        }
        let c: Vec<f64> = curve.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok((0..self.k())
            .map(|k| self.grid.inner(&c, self.eigenfunctions.column(k).as_slice()))
            .collect())
    }

    /// `mean + sum_k scores_k * phi_k` over the full grid.
    pub fn curve_from_scores(&self, scores: &[f64]) -> Result<Vec<f64>> {
        if scores.len() != self.k() {
            return Err(Error::shape(format!("{} scores", self.k()), scores.len()));
        }
        Ok((0..self.grid.p())
            .map(|j| {
                self.mean[j]
                    + scores
                        .iter()
                        .enumerate()
                        .map(|(k, b)| b * self.eigenfunctions[(j, k)])
                        .sum::<f64>()
            })
            .collect())
    }

    /// Curves rebuilt from the leading `k_prime` components.
    pub fn reconstruct(&self, k_prime: usize) -> Result<FunctionalTimeSeries> {
        if k_prime > self.k() {
            return Err(Error::invalid(format!(
                "reconstruction order {k_prime} exceeds retained K = {}",
                self.k()
            )));
        }
        let phi = self.eigenfunctions.columns(0, k_prime);
        let beta = self.scores.columns(0, k_prime);
        let mut out = beta * phi.transpose();
        for mut row in out.row_iter_mut() {
            for (v, m) in row.iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        FunctionalTimeSeries::new(self.grid.clone(), out)
    }

    /// JSON export; scores and residuals only when `full` is set.
    pub fn to_json(&self, full: bool) -> serde_json::Value {
        let cols = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.column_iter().map(|c| c.iter().copied().collect()).collect()
        };
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        let mut v = serde_json::json!({
            "grid": self.grid,
            "mean": self.mean,
            "eigenvalues": self.eigenvalues,
            "eigenfunctions": cols(&self.eigenfunctions),
            "k": self.k(),
            "weights": self.weights,
        });
        if full {
            v["scores"] = serde_json::json!(rows(&self.scores));
            v["residuals"] = serde_json::json!(rows(&self.residuals));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn grid(p: usize) -> Grid {
        Grid::equispaced(p, 0.0, 1.0).unwrap()
    }

    fn random_fts(n: usize, p: usize, seed: u64) -> FunctionalTimeSeries {
        let mut rng = crate::rng::rng(seed);
        let m = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
        FunctionalTimeSeries::new(grid(p), m).unwrap()
    }

    #[test]
    fn select_k_examples() {
        assert_eq!(select_k(&[4.0, 3.0, 2.0, 1.0], 0.9), 3);
        assert_eq!(select_k(&[5.0, 0.0, 0.0], 0.99), 1);
        assert_eq!(select_k(&[1.0, 1.0, 1.0, 1.0], 1.0), 4);
        assert_eq!(select_k(&[0.0, 0.0], 0.5), 0);
    }

    #[test]
    fn rank_one_symmetric_pair() {
        let g = grid(4);
        let mu = [1.0, 2.0, 0.5, -1.0];
        let c = [0.3, -0.4, 1.2, 0.1];
        let rows: Vec<Vec<f64>> = [1.0, -1.0]
            .iter()
            .map(|s| mu.iter().zip(&c).map(|(m, ci)| m + s * ci).collect())
            .collect();
        let fts = FunctionalTimeSeries::from_rows(g.clone(), &rows).unwrap();
        let model = empirical_fpca(&fts, Truncation::Fraction(0.9)).unwrap();
        assert_eq!(model.k(), 1);
        assert!(model.eigenvalues()[1].abs() < 1e-12);
        let cnorm = g.norm_sq(&c).sqrt();
        let phi = model.eigenfunction(0);
        let cos = g.inner(&phi, &c) / cnorm;
        assert!((cos.abs() - 1.0).abs() < 1e-10);
        assert!((model.scores()[(0, 0)].abs() - cnorm).abs() < 1e-10);
        assert!((model.scores()[(0, 0)] + model.scores()[(1, 0)]).abs() < 1e-10);
    }

    #[test]
    fn constant_data_gives_empty_model() {
        let fts = FunctionalTimeSeries::from_rows(grid(3), &[vec![2.0; 3], vec![2.0; 3], vec![2.0; 3]])
            .unwrap();
        let model = empirical_fpca(&fts, Truncation::Fraction(0.9)).unwrap();
        assert_eq!(model.k(), 0);
        assert!(model.residuals().iter().all(|v| *v == 0.0));
        assert_eq!(model.curve_from_scores(&[]).unwrap(), vec![2.0; 3]);
    }

    #[test]
    fn too_few_curves() {
        let fts = random_fts(1, 4, 1);
        assert!(matches!(
            empirical_fpca(&fts, Truncation::Fraction(0.9)),
            Err(Error::TooShort { .. })
        ));
        assert!(empirical_fpca(&random_fts(5, 4, 1), Truncation::Fraction(0.0)).is_err());
    }

    #[test]
    fn orthonormal_and_centered() {
        let fts = random_fts(40, 12, 3);
        let model = empirical_fpca(&fts, Truncation::Fixed(12)).unwrap();
        let g = fts.grid();
        for a in 0..12 {
            for b in 0..12 {
                let ip = g.inner(&model.eigenfunction(a), &model.eigenfunction(b));
                let target = if a == b { 1.0 } else { 0.0 };
                assert!((ip - target).abs() < 1e-8, "{a} {b} {ip}");
            }
        }
        for col in model.scores().column_iter() {
            assert!(col.mean().abs() < 1e-10);
        }
    }

    #[test]
    fn reconstruction_order_checked() {
        let model = empirical_fpca(&random_fts(10, 5, 4), Truncation::Fixed(2)).unwrap();
        assert!(model.reconstruct(3).is_err());
        let r0 = model.reconstruct(0).unwrap();
        for i in 0..10 {
            assert_eq!(r0.curve(i), model.mean().to_vec());
        }
    }

    #[test]
    fn weights_example() {
        let w = outlier_weights(&[1.0, 2.0, 3.0, 4.0, 100.0], 2.33);
        assert_eq!(w, vec![1.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn l1_median_of_symmetric_cloud() {
        let x = DMatrix::from_row_slice(5, 2, &[0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]);
        let m = l1_median(&x, 1e-10, 500);
        assert!(m[0].abs() < 1e-9 && m[1].abs() < 1e-9);
        // one gross outlier barely moves the spatial median
        let y = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 1000.0]);
        let m = l1_median(&y, 1e-10, 500);
        assert!(m[0] >= 1.0 && m[0] <= 2.0);
    }

    #[test]
    fn json_export_fields() {
        let model = empirical_fpca(&random_fts(10, 5, 9), Truncation::Fraction(0.9)).unwrap();
        let slim = model.to_json(false);
        assert!(slim.get("scores").is_none());
        assert_eq!(slim["k"].as_u64().unwrap() as usize, model.k());
        let full = model.to_json(true);
        assert_eq!(full["scores"].as_array().unwrap().len(), 10);
    }
}
