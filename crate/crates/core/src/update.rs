//! Dynamic updating of the remaining part of a partially observed day.
//!
//! Block moving ([`bm_rotate`], [`bm_forecast`]) shifts the daily support so
//! the partial day completes the last curve, then applies the usual score
//! forecast. Functional linear regression ([`flr_fit`], [`flr_predict`])
//! regresses late-block scores on early-block scores and maps the observed
//! head of the day straight to its tail.

use nalgebra::DMatrix;

use crate::data::{FunctionalTimeSeries, Grid, PartialCurve};
use crate::error::{Error, Result};
use crate::fpca::{FpcaModel, FpcaVariant, Truncation};
use crate::linalg::ols;
use crate::scorecast::Forecaster;

/// Curves on the support `(t_m0, t_p] ∪ (t_p, t_p + t_m0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedSeries {
    pub fts: FunctionalTimeSeries,
    pub m0: usize,
    pub original_n: usize,
    /// The head of the first day that no longer fits.
    pub discarded: Vec<f64>,
}

pub fn bm_rotate(fts: &FunctionalTimeSeries, partial: &PartialCurve) -> Result<RotatedSeries> {
    let (n, p) = (fts.n(), fts.p());
    let m0 = partial.m0();
    if partial.grid().p() != p {
        return Err(Error::shape(format!("partial curve on a {p}-point grid"), partial.grid().p()));
    }
    if m0 == 0 || m0 >= p {
        return Err(Error::invalid(format!("m0 = {m0} outside 1..{p}")));
    }
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mut flat = fts.flatten();
    let discarded: Vec<f64> = flat.drain(..m0).collect();
    flat.extend_from_slice(partial.values());

    let g = fts.grid();
    let span = g.support_end - g.support_start;
    let points: Vec<f64> = g.points[m0..]
        .iter()
        .copied()
        .chain(g.points[..m0].iter().map(|t| t + span))
        .collect();
    let grid = Grid::with_points(points, g.dt)?;
    let rotated = FunctionalTimeSeries::new(grid, DMatrix::from_row_slice(n, p, &flat))?;
    Ok(RotatedSeries {
        fts: rotated,
        m0,
        original_n: n,
        discarded,
    })
}

#[derive(Debug, Clone)]
pub struct BmForecast {
    pub model: FpcaModel,
    pub scores: Vec<f64>,
    /// Updated forecast for points `m0..p` of the partial day.
    pub remaining: Vec<f64>,
    /// Forecast of the next day's first `m0` points; never scored.
    pub next_head: Vec<f64>,
}

pub fn bm_forecast(
    rotated: &RotatedSeries,
    trunc: Truncation,
    variant: &FpcaVariant,
    forecaster: &Forecaster,
) -> Result<BmForecast> {
    let model = variant.fit(&rotated.fts, trunc)?;
    let scores = forecaster.forecast_one(model.scores())?;
    let mut curve = model.curve_from_scores(&scores)?;
    let p = curve.len();
    let next_head = curve.split_off(p - rotated.m0);
    Ok(BmForecast {
        model,
        scores,
        remaining: curve,
        next_head,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlrModel {
    m0: usize,
    early: FpcaModel,
    late: FpcaModel,
    /// K x M regression of late scores on early scores.
    coefficients: DMatrix<f64>,
    /// n x (p - m0) in-sample late-block residual functions.
    residuals: DMatrix<f64>,
}

/// Fit the score regression `zeta = xi * coef` (no intercept; both score sets
/// are centered) between the early block `[0, m0)` and the late block
/// `[m0, p)`.
pub fn flr_fit(
    fts: &FunctionalTimeSeries,
    m0: usize,
    trunc: Truncation,
    variant: &FpcaVariant,
) -> Result<FlrModel> {
    let (n, p) = (fts.n(), fts.p());
    if m0 == 0 || m0 >= p {
        return Err(Error::invalid(format!("m0 = {m0} outside 1..{p}")));
    }
    let early = variant.fit(&fts.block(0..m0), trunc)?;
    let late = variant.fit(&fts.block(m0..p), trunc)?;
    let (k, m) = (early.k(), late.k());
    if n < k + m + 2 {
        return Err(Error::TooShort {
            needed: k + m + 2,
            got: n,
        });
    }
    let coefficients = if k == 0 || m == 0 {
        DMatrix::zeros(k, m)
    } else {
        ols(early.scores(), late.scores(), "scores")?
    };
    let fitted = early.scores() * &coefficients * late.eigenfunctions().transpose();
    let late_x = fts.curves().columns(m0, p - m0);
    let residuals = DMatrix::from_fn(n, p - m0, |i, j| late_x[(i, j)] - late.mean()[j] - fitted[(i, j)]);
    Ok(FlrModel {
        m0,
        early,
        late,
        coefficients,
        residuals,
    })
}

/// Remaining-day forecast from the observed head of the day.
pub fn flr_predict(model: &FlrModel, partial: &PartialCurve) -> Result<Vec<f64>> {
    if partial.m0() != model.m0 {
        return Err(Error::invalid(format!(
            "partial curve has m0 = {}, model was fitted with m0 = {}",
            partial.m0(),
            model.m0
        )));
    }
    model.predict_from_head(partial.values())
}

impl FlrModel {
    pub fn m0(&self) -> usize {
        self.m0
    }

    pub fn early(&self) -> &FpcaModel {
        &self.early
    }

    pub fn late(&self) -> &FpcaModel {
        &self.late
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.coefficients
    }

    pub fn residuals(&self) -> &DMatrix<f64> {
        &self.residuals
    }

    pub fn predict_from_head(&self, head: &[f64]) -> Result<Vec<f64>> {
        let xi = self.early.project(head)?;
        let zeta: Vec<f64> = (0..self.late.k())
            .map(|m| (0..xi.len()).map(|k| xi[k] * self.coefficients[(k, m)]).sum())
            .collect();
        self.late.curve_from_scores(&zeta)
    }

    /// Regression kernel on the grid: entry (s, t) is
    /// `sum_k sum_m phi_k(s) coef_km psi_m(t)`, s early, t late.
    pub fn kernel(&self) -> DMatrix<f64> {
        self.early.eigenfunctions() * &self.coefficients * self.late.eigenfunctions().transpose()
    }
}
