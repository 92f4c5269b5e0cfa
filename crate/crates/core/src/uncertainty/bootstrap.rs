use nalgebra::DMatrix;
use rand::Rng as _;

use super::{BootstrapConfig, PointwiseInterval};
use crate::error::{Error, Result};
use crate::fpca::FpcaModel;
use crate::scorecast::{ts_forecast_curve, Forecaster, Support};
use crate::{par, rng};

pub const DEFAULT_MIN_TRAINING: usize = 20;

/// One-step-ahead score errors from an expanding window: the forecaster is
/// refitted on rows `..o` for every origin `o` in `l_min..n` and the error
/// `scores[o] - forecast` recorded. Returns `(n - l_min) x K`.
pub fn insample_score_errors(scores: &DMatrix<f64>, forecaster: &Forecaster, l_min: usize) -> Result<DMatrix<f64>> {
    let (n, k) = scores.shape();
    if l_min == 0 || n <= l_min {
        return Err(Error::TooShort {
            needed: l_min.max(1) + 1,
            got: n,
        });
    }
    let rows = par::try_map_range(n - l_min, |j| {
        let o = l_min + j;
        let history = scores.rows(0, o).into_owned();
        let f = forecaster.forecast_one(&history)?;
        Ok::<_, Error>((0..k).map(|c| scores[(o, c)] - f[c]).collect::<Vec<f64>>())
    })?;
    Ok(DMatrix::from_fn(n - l_min, k, |r, c| rows[r][c]))
}

/// Curve-level one-step errors matching [`insample_score_errors`]: the
/// score error mapped through the eigenfunctions plus the truncation
/// residual of the target curve.
pub fn insample_curve_errors(model: &FpcaModel, score_errors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, k) = score_errors.shape();
    if k != model.k() {
        return Err(Error::shape(format!("{} score columns", model.k()), k));
    }
    if rows > model.n() {
        return Err(Error::shape(format!("at most {} error rows", model.n()), rows));
    }
    let offset = model.n() - rows;
    let mapped = score_errors * model.eigenfunctions().transpose();
    Ok(DMatrix::from_fn(rows, model.grid().p(), |i, j| {
        mapped[(i, j)] + model.residuals()[(offset + i, j)]
    }))
}

/// Resample score errors per component and residual functions from all
/// curves, add both to the point forecast and take pointwise quantiles.
pub fn bootstrap_pointwise_pi(
    model: &FpcaModel,
    point_scores: &[f64],
    score_errors: &DMatrix<f64>,
    support: Support,
    cfg: &BootstrapConfig,
    keep_samples: bool,
) -> Result<PointwiseInterval> {
    cfg.validate()?;
    let k = model.k();
    if score_errors.ncols() != k {
        return Err(Error::shape(format!("{k} error columns"), score_errors.ncols()));
    }
    if k > 0 && score_errors.nrows() == 0 {
        return Err(Error::invalid("empty score error matrix"));
    }
    let range = support.range(model.grid().p())?;
    let point = ts_forecast_curve(model, point_scores, support)?;
    let residuals = model.residuals();
    let (n, m) = (residuals.nrows(), score_errors.nrows());

    let samples = par::map_range(cfg.replicates, |b| {
        let mut rng = rng::rng_for(cfg.seed, b as u64);
        let scores: Vec<f64> = (0..k)
            .map(|c| point_scores[c] + score_errors[(rng.random_range(0..m), c)])
            .collect();
        let i = rng.random_range(0..n);
        let mut curve = ts_forecast_curve(model, &scores, support).expect("validated shape");
        for (v, j) in curve.iter_mut().zip(range.clone()) {
            *v += residuals[(i, j)];
        }
        curve
    });
    Ok(PointwiseInterval::from_samples(point, samples, cfg.alpha, keep_samples))
}
