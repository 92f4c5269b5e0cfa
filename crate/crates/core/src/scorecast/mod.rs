//! Forecasting principal component scores and assembling curve forecasts.

mod arima;
pub mod optim;
mod var;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use arima::{
    aicc, choose_d, fit_ar_ols, fit_arima, fit_auto_arima, ArimaForecast, ArimaModel, ArimaOrder,
    DIFFERENCE_RATIO, MAX_ORDER as ARIMA_MAX_ORDER,
};
pub use var::{fit_var, fit_var_order, var_design, VarModel, DEFAULT_MAX_ORDER as VAR_MAX_ORDER};

use crate::error::{Error, Result};
use crate::fpca::FpcaModel;
use crate::par;

/// Score forecasting method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Forecaster {
    /// Sample mean of each score column.
    Mean,
    /// Independent auto-ARIMA per component.
    Arima,
    /// Joint VAR with AIC order selection up to `max_order`.
    Var { max_order: usize },
}

impl Default for Forecaster {
    fn default() -> Self {
        Forecaster::Var {
            max_order: VAR_MAX_ORDER,
        }
    }
}

impl Forecaster {
    pub fn var() -> Self {
        Self::default()
    }

    pub fn label(&self) -> &'static str {
        match self {
            Forecaster::Mean => "mean",
            Forecaster::Arima => "arima",
            Forecaster::Var { .. } => "var",
        }
    }

    /// Fewest score rows the method can be fitted on, for K components.
    pub fn min_history(&self, k: usize) -> usize {
        match self {
            Forecaster::Mean => 1,
            Forecaster::Arima => arima::MIN_LENGTH,
            Forecaster::Var { .. } => 3 + k,
        }
    }

    /// Fit on the n x K score matrix and forecast h steps (h x K).
    pub fn forecast(&self, scores: &DMatrix<f64>, h: usize) -> Result<DMatrix<f64>> {
        let (n, k) = scores.shape();
        if h == 0 {
            return Err(Error::invalid("forecast horizon must be >= 1"));
        }
        if k == 0 {
            return Ok(DMatrix::zeros(h, 0));
        }
        if n == 0 {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        match self {
            Forecaster::Mean => {
                let means: Vec<f64> = scores.column_iter().map(|c| c.mean()).collect();
                Ok(DMatrix::from_fn(h, k, |_, c| means[c]))
            }
            Forecaster::Arima => {
                let cols = par::try_map_range(k, |c| {
                    let series: Vec<f64> = scores.column(c).iter().copied().collect();
                    fit_auto_arima(&series).map(|m| m.forecast(h).mean)
                })?;
                Ok(DMatrix::from_fn(h, k, |r, c| cols[c][r]))
            }
            Forecaster::Var { max_order } => Ok(fit_var(scores, *max_order)?.forecast(h)),
        }
    }

    /// One-step-ahead forecast as a vector of K scores.
    pub fn forecast_one(&self, scores: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.forecast(scores, 1)?.row(0).iter().copied().collect())
    }
}

/// Part of the grid a curve forecast is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    Full,
    /// Points `m0..p` (the remainder of a day whose first `m0` points are
    /// observed).
    Remaining(usize),
    /// Points `0..len`; the remainder of a day on a block-moved grid.
    Leading(usize),
}

impl Support {
    pub fn range(&self, p: usize) -> Result<std::ops::Range<usize>> {
        match *self {
            Support::Full => Ok(0..p),
            Support::Remaining(m0) if m0 >= 1 && m0 < p => Ok(m0..p),
            Support::Remaining(m0) => Err(Error::invalid(format!("m0 = {m0} outside 1..{p}"))),
            Support::Leading(len) if len >= 1 && len <= p => Ok(0..len),
            Support::Leading(len) => Err(Error::invalid(format!("support length {len} outside 1..={p}"))),
        }
    }
}

/// `mu(t) + sum_k score_k phi_k(t)` restricted to `support`.
pub fn ts_forecast_curve(model: &FpcaModel, scores: &[f64], support: Support) -> Result<Vec<f64>> {
    let range = support.range(model.grid().p())?;
    let full = model.curve_from_scores(scores)?;
    Ok(full[range].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FunctionalTimeSeries, Grid};
    use crate::fpca::{empirical_fpca, Truncation};

    fn model() -> FpcaModel {
        let g = Grid::equispaced(6, 0.0, 1.0).unwrap();
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| (0..6).map(|j| ((i * 7 + j * 3) % 11) as f64 / 3.0).collect())
            .collect();
        empirical_fpca(&FunctionalTimeSeries::from_rows(g, &rows).unwrap(), Truncation::Fixed(2)).unwrap()
    }

    #[test]
    fn zero_scores_give_mean() {
        let m = model();
        assert_eq!(ts_forecast_curve(&m, &[0.0, 0.0], Support::Full).unwrap(), m.mean().to_vec());
        assert_eq!(
            ts_forecast_curve(&m, &[0.0, 0.0], Support::Remaining(4)).unwrap(),
            m.mean()[4..].to_vec()
        );
    }

    #[test]
    fn slice_commutes() {
        let m = model();
        let s = [1.3, -0.4];
        let full = ts_forecast_curve(&m, &s, Support::Full).unwrap();
        let part = ts_forecast_curve(&m, &s, Support::Remaining(2)).unwrap();
        assert_eq!(&full[2..], part.as_slice());
    }

    #[test]
    fn single_component_arithmetic() {
        let g = Grid::equispaced(4, 0.0, 1.0).unwrap();
        let rows = vec![vec![1.0, 2.0, 3.0, 4.0], vec![3.0, 2.0, 1.0, 0.0], vec![2.0, 2.0, 2.0, 2.0]];
        let m = empirical_fpca(&FunctionalTimeSeries::from_rows(g, &rows).unwrap(), Truncation::Fixed(1))
            .unwrap();
        let c = ts_forecast_curve(&m, &[2.0], Support::Full).unwrap();
        for j in 0..4 {
            assert!((c[j] - (m.mean()[j] + 2.0 * m.eigenfunctions()[(j, 0)])).abs() < 1e-14);
        }
        assert!(ts_forecast_curve(&m, &[1.0, 2.0], Support::Full).is_err());
        assert!(ts_forecast_curve(&m, &[1.0], Support::Remaining(4)).is_err());
    }

    #[test]
    fn empty_score_set() {
        let f = Forecaster::var().forecast(&DMatrix::zeros(10, 0), 2).unwrap();
        assert_eq!(f.shape(), (2, 0));
    }
}
