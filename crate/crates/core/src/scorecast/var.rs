//! Vector autoregression fitted by OLS on the stacked regression
//! `beta_i = B^T x_i + a_i`, `x_i = (1, beta_{i-1}, ..., beta_{i-order})`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ols;

pub const DEFAULT_MAX_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub order: usize,
    /// (1 + K * order) x K; row 0 is the intercept, rows `1 + K*(l-1) ..`
    /// hold the transposed lag-`l` matrix.
    pub coefficients: DMatrix<f64>,
    pub residual_cov: DMatrix<f64>,
    pub aic: f64,
    /// Training scores, n x K.
    pub history: DMatrix<f64>,
}

/// Regressor row for predicting the observation that follows `rows[..end]`.
fn regressor(history: &DMatrix<f64>, end: usize, order: usize, out: &mut [f64]) {
    let k = history.ncols();
    out[0] = 1.0;
    for l in 1..=order {
        for c in 0..k {
            out[1 + (l - 1) * k + c] = history[(end - l, c)];
        }
    }
}

/// Stacked design and response for a given order.
pub fn var_design(scores: &DMatrix<f64>, order: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, k) = scores.shape();
    let rows = n - order;
    let mut x = DMatrix::zeros(rows, 1 + k * order);
    let mut buf = vec![0.0; 1 + k * order];
    for r in 0..rows {
        regressor(scores, order + r, order, &mut buf);
        for (c, v) in buf.iter().enumerate() {
            x[(r, c)] = *v;
        }
    }
    let y = scores.rows(order, rows).into_owned();
    (x, y)
}

pub fn fit_var_order(scores: &DMatrix<f64>, order: usize) -> Result<VarModel> {
    let (n, k) = scores.shape();
    if k == 0 || order == 0 {
        return Err(Error::invalid("VAR needs K >= 1 and order >= 1"));
    }
    let needed = order + 1 + k * order + 1;
    if n < needed {
        return Err(Error::TooShort { needed, got: n });
    }
    let (x, y) = var_design(scores, order);
    let b = ols(&x, &y, "design")?;
    let resid = &y - &x * &b;
    let rows = (n - order) as f64;
    let cov = resid.transpose() * &resid / rows;
    let det = cov.determinant();
    let aic = det.max(f64::MIN_POSITIVE).ln() + 2.0 * (k + k * k * order) as f64 / rows;
    Ok(VarModel {
        order,
        coefficients: b,
        residual_cov: cov,
        aic,
        history: scores.clone(),
    })
}

/// Fit orders `1..=max_order` (as far as the sample allows) and keep the one
/// with the smallest AIC; ties go to the lower order.
pub fn fit_var(scores: &DMatrix<f64>, max_order: usize) -> Result<VarModel> {
    let (n, k) = scores.shape();
    if k == 0 {
        return Err(Error::invalid("VAR needs at least one score column"));
    }
    if let Some(i) = scores.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let mut best: Option<VarModel> = None;
    for order in 1..=max_order.max(1) {
        if n < order + 1 + k * order + 1 {
            break;
        }
        let model = fit_var_order(scores, order)?;
        if best.as_ref().is_none_or(|b| model.aic < b.aic) {
            best = Some(model);
        }
    }
    best.ok_or(Error::TooShort {
        needed: 2 + 1 + k,
        got: n,
    })
}

impl VarModel {
    pub fn k(&self) -> usize {
        self.history.ncols()
    }

    pub fn intercept(&self) -> Vec<f64> {
        self.coefficients.row(0).iter().copied().collect()
    }

    /// Lag-`l` coefficient matrix `Phi_l` (K x K) in `beta_i = .. + Phi_l beta_{i-l}`.
    pub fn lag_matrix(&self, l: usize) -> DMatrix<f64> {
        let k = self.k();
        self.coefficients
            .rows(1 + (l - 1) * k, k)
            .transpose()
    }

    /// Recursive h-step forecasts (h x K): later steps feed on earlier
    /// forecasts.
    pub fn forecast(&self, h: usize) -> DMatrix<f64> {
        let (n, k) = self.history.shape();
        let mut ext = self.history.clone().resize_vertically(n + h, 0.0);
        let mut buf = vec![0.0; 1 + k * self.order];
        for step in 0..h {
            regressor(&ext, n + step, self.order, &mut buf);
            for c in 0..k {
                ext[(n + step, c)] = (0..buf.len()).map(|r| buf[r] * self.coefficients[(r, c)]).sum();
            }
        }
        ext.rows(n, h).into_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hand_model(order: usize, coefficients: DMatrix<f64>, history: DMatrix<f64>) -> VarModel {
        let k = history.ncols();
        VarModel {
            order,
            coefficients,
            residual_cov: DMatrix::identity(k, k),
            aic: 0.0,
            history,
        }
    }

    #[test]
    fn intercept_only_forecast() {
        let mut b = DMatrix::zeros(3, 2);
        b[(0, 0)] = 1.5;
        b[(0, 1)] = -2.0;
        let m = hand_model(1, b, DMatrix::from_element(5, 2, 7.0));
        let f = m.forecast(3);
        for r in 0..3 {
            assert_eq!((f[(r, 0)], f[(r, 1)]), (1.5, -2.0));
        }
    }

    #[test]
    fn diagonal_var1_recursion() {
        let mut b = DMatrix::zeros(3, 2);
        b[(1, 0)] = 0.5;
        b[(2, 1)] = 0.5;
        let hist = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 4.0, 2.0]);
        let f = hand_model(1, b, hist).forecast(2);
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.5]));
    }

    #[test]
    fn too_short_and_nonfinite() {
        let s = DMatrix::from_element(3, 2, 1.0);
        assert!(matches!(fit_var(&s, 5), Err(Error::TooShort { .. })));
        let mut s = DMatrix::from_fn(20, 1, |i, _| (i as f64).sin());
        s[(3, 0)] = f64::INFINITY;
        assert!(matches!(fit_var(&s, 2), Err(Error::NonFinite(3))));
    }

    #[test]
    fn collinear_columns_rejected() {
        let s = DMatrix::from_fn(30, 2, |i, c| (i as f64 * 0.7).sin() * if c == 0 { 1.0 } else { 2.0 });
        assert!(matches!(fit_var_order(&s, 1), Err(Error::Collinear(_))));
    }

    #[test]
    fn lag_matrix_layout() {
        let mut b = DMatrix::zeros(5, 2);
        // Phi_1 = [[0.5, 0.2], [-0.2, -0.5]], Phi_2 = [[-0.3, -0.7], [-0.1, 0.3]]
        let p1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.2, -0.5]);
        let p2 = DMatrix::from_row_slice(2, 2, &[-0.3, -0.7, -0.1, 0.3]);
        b.rows_mut(1, 2).copy_from(&p1.transpose());
        b.rows_mut(3, 2).copy_from(&p2.transpose());
        let m = hand_model(2, b, DMatrix::zeros(4, 2));
        assert_eq!(m.lag_matrix(1), p1);
        assert_eq!(m.lag_matrix(2), p2);
    }
}
