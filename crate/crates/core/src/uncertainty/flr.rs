use nalgebra::{DMatrix, DVector};
use rand::Rng as _;

use super::meboot::MebootParts;
use super::{BootstrapConfig, PointwiseInterval};
use crate::data::{FunctionalTimeSeries, PartialCurve};
use crate::error::Result;
use crate::fpca::{empirical_fpca, FpcaVariant, Truncation};
use crate::update::{flr_fit, flr_predict};
use crate::{par, rng};

/// Regression intervals for the remaining part of a partial day: the scores
/// of every positive-variance component are resampled with the maximum
/// entropy bootstrap, the curves rebuilt, the regression refitted, and a
/// historical late-block residual added to each replicate forecast.
pub fn flr_bootstrap_pi(
    fts: &FunctionalTimeSeries,
    partial: &PartialCurve,
    trunc: Truncation,
    variant: &FpcaVariant,
    cfg: &BootstrapConfig,
) -> Result<PointwiseInterval> {
    flr_bootstrap_pi_with(fts, partial, trunc, variant, cfg, true, false)
}

/// As [`flr_bootstrap_pi`]; `resample_residuals = false` leaves only the
/// coefficient uncertainty.
pub fn flr_bootstrap_pi_with(
    fts: &FunctionalTimeSeries,
    partial: &PartialCurve,
    trunc: Truncation,
    variant: &FpcaVariant,
    cfg: &BootstrapConfig,
    resample_residuals: bool,
    keep_samples: bool,
) -> Result<PointwiseInterval> {
    cfg.validate()?;
    let m0 = partial.m0();
    let model = flr_fit(fts, m0, trunc, variant)?;
    let point = flr_predict(&model, partial)?;

    let full = empirical_fpca(fts, Truncation::Fraction(1.0))?;
    let k = full.k();
    let columns: Vec<MebootParts> = (0..k)
        .map(|c| MebootParts::new(full.scores().column(c).as_slice()))
        .collect::<Result<_>>()?;
    let n = fts.n();
    let residuals = model.residuals();
    let phi_t = full.eigenfunctions().transpose();

    let replicate = |b: usize| -> Result<Vec<f64>> {
        let mut rng = rng::rng_for(cfg.seed, b as u64);
        let mut beta = DMatrix::zeros(n, k);
        for (c, parts) in columns.iter().enumerate() {
            beta.set_column(c, &DVector::from_vec(parts.draw(&mut rng)));
        }
        let mut x = &beta * &phi_t;
        for mut row in x.row_iter_mut() {
            for (v, m) in row.iter_mut().zip(full.mean()) {
                *v += m;
            }
        }
        let rebuilt = FunctionalTimeSeries::new(fts.grid().clone(), x)?;
        let refit = flr_fit(&rebuilt, m0, trunc, variant)?;
        let mut curve = flr_predict(&refit, partial)?;
        if resample_residuals {
            let i = rng.random_range(0..residuals.nrows());
            for (j, v) in curve.iter_mut().enumerate() {
                *v += residuals[(i, j)];
            }
        }
        Ok(curve)
    };
    let samples = par::try_map_range(cfg.replicates, |b| replicate(b).map_err(|e| e.in_replicate(b)))?;
    Ok(PointwiseInterval::from_samples(point, samples, cfg.alpha, keep_samples))
}
