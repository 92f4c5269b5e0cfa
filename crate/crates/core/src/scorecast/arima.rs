//! Non-seasonal ARIMA(p, d, q) with conditional-sum-of-squares estimation and
//! AICc order search.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::optim::NelderMead;
use crate::error::{Error, Result};
use crate::linalg::{mean, ols_vec, variance};

pub const MAX_ORDER: usize = 5;
pub const MIN_LENGTH: usize = 10;
/// Difference when `var(diff(x)) / var(x)` falls below this ratio.
pub const DIFFERENCE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

/// `(1 - phi(B)) (1 - B)^d y_t = c + (1 + theta(B)) w_t`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub sigma2: f64,
    pub aicc: f64,
    /// Training series on the original (undifferenced) scale.
    pub series: Vec<f64>,
    /// In-sample CSS innovations, one per time point after the first `p`
    /// points of the differenced series.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArimaForecast {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

fn difference(x: &[f64], d: usize) -> Vec<f64> {
    if d == 0 {
        x.to_vec()
    } else {
        x.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// CSS innovations of an ARMA(p, q) with intercept on `w`, starting at `t = p`
/// with zero pre-sample innovations.
fn css_residuals(w: &[f64], c: f64, ar: &[f64], ma: &[f64]) -> Vec<f64> {
    let p = ar.len();
    let mut e = vec![0.0; w.len()];
    for t in p..w.len() {
        let mut pred = c;
        for (i, phi) in ar.iter().enumerate() {
            pred += phi * w[t - 1 - i];
        }
        for (j, theta) in ma.iter().enumerate() {
            if t > j && t - 1 - j >= p {
                pred += theta * e[t - 1 - j];
            }
        }
        e[t] = w[t] - pred;
    }
    e.split_off(p)
}

fn css(w: &[f64], c: f64, ar: &[f64], ma: &[f64]) -> f64 {
    let ssr: f64 = css_residuals(w, c, ar, ma).iter().map(|e| e * e).sum();
    if ssr.is_finite() {
        ssr
    } else {
        f64::MAX
    }
}

pub fn aicc(n_eff: usize, sigma2: f64, m: usize) -> f64 {
    let n = n_eff as f64;
    let m = m as f64;
    n * sigma2.max(f64::MIN_POSITIVE).ln() + 2.0 * m + 2.0 * m * (m + 1.0) / (n - m - 1.0)
}

/// Lagged design `[1, w_{t-1}, .., w_{t-p}]` for `t = start..len`.
fn ar_design(w: &[f64], p: usize, start: usize) -> DMatrix<f64> {
    DMatrix::from_fn(w.len() - start, p + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            w[start + r - c]
        }
    })
}

/// Least-squares AR(p) with intercept; this is the exact CSS minimizer for
/// pure autoregressions.
pub fn fit_ar_ols(w: &[f64], p: usize) -> Result<(f64, Vec<f64>)> {
    if p == 0 {
        return Ok((mean(w), Vec::new()));
    }
    let x = ar_design(w, p, p);
    let beta = ols_vec(&x, &w[p..], "AR design")?;
    Ok((beta[0], beta[1..].to_vec()))
}

/// Hannan-Rissanen starting values: a long autoregression supplies proxy
/// innovations, then `w_t` is regressed on its own lags and lagged proxies.
fn hannan_rissanen(w: &[f64], p: usize, q: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let fallback = (mean(w), vec![0.0; p], vec![0.0; q]);
    let long = (p + q + 1).max(10).min(w.len() / 4);
    if long == 0 || long < q {
        return fallback;
    }
    let Ok((c0, phi_long)) = fit_ar_ols(w, long) else {
        return fallback;
    };
    let mut proxy = vec![0.0; w.len()];
    for t in long..w.len() {
        let pred = c0 + (0..long).map(|i| phi_long[i] * w[t - 1 - i]).sum::<f64>();
        proxy[t] = w[t] - pred;
    }
    let start = long + p.max(q);
    if w.len() <= start + p + q + 2 {
        return fallback;
    }
    let x = DMatrix::from_fn(w.len() - start, 1 + p + q, |r, c| {
        let t = start + r;
        match c {
            0 => 1.0,
            c if c <= p => w[t - c],
            c => proxy[t - (c - p)],
        }
    });
    match ols_vec(&x, &w[start..], "HR design") {
        Ok(b) => (b[0], b[1..=p].to_vec(), b[p + 1..].to_vec()),
        Err(_) => fallback,
    }
}

/// CSS fit of one ARMA(p, q) candidate on the (already differenced) series.
fn fit_candidate(w: &[f64], p: usize, q: usize) -> Option<(f64, Vec<f64>, Vec<f64>, f64)> {
    let (c, ar, ma) = if q == 0 {
        let (c, ar) = fit_ar_ols(w, p).ok()?;
        (c, ar, Vec::new())
    } else {
        let (c0, ar0, ma0) = hannan_rissanen(w, p, q);
        let mut x0 = vec![c0];
        x0.extend(&ar0);
        x0.extend(&ma0);
        let sd = variance(w).sqrt().max(1e-8);
        let step: Vec<f64> = x0
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 { 0.1 * sd.max(v.abs()) } else { 0.1 })
            .collect();
        let objective = |v: &[f64]| css(w, v[0], &v[1..=p], &v[p + 1..]);
        let nm = NelderMead {
            max_evals: 400 * (1 + p + q),
            f_tol: 1e-10,
        };
        let (x, _) = nm.minimize(objective, &x0, &step);
        (x[0], x[1..=p].to_vec(), x[p + 1..].to_vec())
    };
    let ssr: f64 = css_residuals(w, c, &ar, &ma).iter().map(|e| e * e).sum();
    if !ssr.is_finite() {
        return None;
    }
    let n_eff = w.len() - p;
    Some((c, ar, ma, ssr / n_eff as f64))
}

fn check_series(series: &[f64]) -> Result<()> {
    if series.len() < MIN_LENGTH {
        return Err(Error::TooShort {
            needed: MIN_LENGTH,
            got: series.len(),
        });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// Differencing order from the variance-ratio rule.
pub fn choose_d(series: &[f64]) -> usize {
    let v = variance(series);
    if !(v > 0.0) {
        return 0;
    }
    let vd = variance(&difference(series, 1));
    usize::from(vd / v < DIFFERENCE_RATIO)
}

/// Fit one fixed order by CSS.
pub fn fit_arima(series: &[f64], order: ArimaOrder) -> Result<ArimaModel> {
    check_series(series)?;
    if order.d > 1 || order.p > MAX_ORDER || order.q > MAX_ORDER {
        return Err(Error::invalid(format!("unsupported order {order:?}")));
    }
    let w = difference(series, order.d);
    if w.len() <= order.p + order.p + order.q + 2 {
        return Err(Error::TooShort {
            needed: 2 * order.p + order.q + 3 + order.d,
            got: series.len(),
        });
    }
    let (c, ar, ma, sigma2) =
        fit_candidate(&w, order.p, order.q).ok_or(Error::Collinear("ARMA design"))?;
    ArimaModel::new(order, c, ar, ma, sigma2, series.to_vec())
}

/// Exhaustive AICc search over p, q in 0..=5 with p + q <= 5; d from the
/// variance-ratio rule. Ties go to fewer parameters, then lower p.
pub fn fit_auto_arima(series: &[f64]) -> Result<ArimaModel> {
    check_series(series)?;
    let d = choose_d(series);
    let w = difference(series, d);
    let mut best: Option<(f64, ArimaOrder, f64, Vec<f64>, Vec<f64>, f64)> = None;
    for total in 0..=MAX_ORDER {
        for p in (0..=total).rev() {
            let q = total - p;
            let m = p + q + 1;
            if w.len() < p + m + 3 {
                continue;
            }
            let n_eff = w.len() - p;
            let Some((c, ar, ma, sigma2)) = fit_candidate(&w, p, q) else {
                continue;
            };
            let crit = aicc(n_eff, sigma2, m);
            let order = ArimaOrder { p, d, q };
            let better = match &best {
                None => true,
                Some((b, bo, ..)) => {
                    let tol = 1e-9 * b.abs().max(1.0);
                    if crit < b - tol {
                        true
                    } else if crit <= b + tol {
                        let (np, bp) = (p + q, bo.p + bo.q);
                        np < bp || (np == bp && p < bo.p)
                    } else {
                        false
                    }
                }
            };
            if better {
                best = Some((crit, order, c, ar, ma, sigma2));
            }
        }
    }
    let (_, order, c, ar, ma, sigma2) = best.ok_or(Error::TooShort {
        needed: MIN_LENGTH,
        got: series.len(),
    })?;
    ArimaModel::new(order, c, ar, ma, sigma2, series.to_vec())
}

impl ArimaModel {
    /// Assemble a model from known coefficients; residuals and AICc are
    /// recomputed from `series`.
    pub fn new(
        order: ArimaOrder,
        intercept: f64,
        ar: Vec<f64>,
        ma: Vec<f64>,
        sigma2: f64,
        series: Vec<f64>,
    ) -> Result<Self> {
        if ar.len() != order.p || ma.len() != order.q || order.d > 1 {
            return Err(Error::invalid(format!(
                "coefficients do not match order {order:?}"
            )));
        }
        if series.len() <= order.d + order.p {
            return Err(Error::TooShort {
                needed: order.d + order.p + 1,
                got: series.len(),
            });
        }
        let w = difference(&series, order.d);
        let residuals = css_residuals(&w, intercept, &ar, &ma);
        let m = order.p + order.q + 1;
        let aicc = aicc(residuals.len(), sigma2, m);
        Ok(Self {
            order,
            intercept,
            ar,
            ma,
            sigma2,
            aicc,
            series,
            residuals,
        })
    }

    /// psi-weights of the (integrated) MA(infinity) representation.
    fn psi_weights(&self, h: usize) -> Vec<f64> {
        let mut psi = vec![0.0; h];
        if h == 0 {
            return psi;
        }
        psi[0] = 1.0;
        for j in 1..h {
            let mut v = if j <= self.ma.len() { self.ma[j - 1] } else { 0.0 };
            for (i, phi) in self.ar.iter().enumerate() {
                if j > i {
                    v += phi * psi[j - 1 - i];
                }
            }
            psi[j] = v;
        }
        if self.order.d == 1 {
            let mut acc = 0.0;
            for v in psi.iter_mut() {
                acc += *v;
                *v = acc;
            }
        }
        psi
    }

    /// Point forecasts and forecast-error variances for horizons 1..=h.
    pub fn forecast(&self, h: usize) -> ArimaForecast {
        let w = difference(&self.series, self.order.d);
        let n = w.len();
        let q = self.ma.len();
        let mut ext = w.clone();
        for step in 0..h {
            let t = n + step;
            let mut v = self.intercept;
            for (i, phi) in self.ar.iter().enumerate() {
                v += phi * ext[t - 1 - i];
            }
            for j in 0..q {
                // innovation at time t - 1 - j, known only in-sample
                let lag = t - 1 - j;
                if lag < n && lag + self.residuals.len() >= n {
                    v += self.ma[j] * self.residuals[lag + self.residuals.len() - n];
                }
            }
            ext.push(v);
        }
        let mut mean = ext.split_off(n);
        if self.order.d == 1 {
            let mut level = *self.series.last().expect("non-empty series");
            for v in mean.iter_mut() {
                level += *v;
                *v = level;
            }
        }
        let psi = self.psi_weights(h);
        let mut acc = 0.0;
        let variance = psi
            .iter()
            .map(|p| {
                acc += p * p;
                self.sigma2 * acc
            })
            .collect();
        ArimaForecast { mean, variance }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = crate::rng::Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1(n: usize, phi: f64, seed: u64) -> Vec<f64> {
        let e = noise(n + 100, seed);
        let mut x = vec![0.0; n + 100];
        for t in 1..x.len() {
            x[t] = phi * x[t - 1] + e[t];
        }
        x.split_off(100)
    }

    #[test]
    fn white_noise_selects_mean_model() {
        let x = noise(500, 11);
        let m = fit_auto_arima(&x).unwrap();
        assert_eq!(m.order, ArimaOrder { p: 0, d: 0, q: 0 });
        let f = m.forecast(5);
        for v in f.mean {
            assert!((v - mean(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_intercept_forecast() {
        let m = ArimaModel::new(ArimaOrder { p: 0, d: 0, q: 0 }, 2.0, vec![], vec![], 1.0, vec![1.0; 12])
            .unwrap();
        assert_eq!(m.forecast(4).mean, vec![2.0; 4]);
    }

    #[test]
    fn ar1_recursion() {
        let mut s = vec![0.0; 11];
        s[10] = 4.0;
        let m = ArimaModel::new(ArimaOrder { p: 1, d: 0, q: 0 }, 0.0, vec![0.5], vec![], 1.0, s).unwrap();
        let f = m.forecast(3);
        assert_eq!(f.mean, vec![2.0, 1.0, 0.5]);
        assert!((f.variance[1] - 1.25).abs() < 1e-12);
    }

    #[test]
    fn random_walk_forecast_is_flat() {
        let s: Vec<f64> = (0..20).map(|i| (i as f64).sin() * 3.0).collect();
        let m = ArimaModel::new(ArimaOrder { p: 0, d: 1, q: 0 }, 0.0, vec![], vec![], 1.0, s.clone()).unwrap();
        let f = m.forecast(4);
        assert_eq!(f.mean, vec![*s.last().unwrap(); 4]);
        assert_eq!(f.variance, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn linear_trend_uses_drift() {
        let s: Vec<f64> = (0..30).map(|i| 1.5 + 0.25 * i as f64).collect();
        let m = fit_auto_arima(&s).unwrap();
        assert_eq!(m.order, ArimaOrder { p: 0, d: 1, q: 0 });
        let f = m.forecast(3).mean;
        let last = *s.last().unwrap();
        for (h, v) in f.iter().enumerate() {
            assert!((v - (last + 0.25 * (h + 1) as f64)).abs() < 1e-10);
        }
    }

    #[test]
    fn ma_forecast_uses_last_innovation() {
        let x = noise(400, 5);
        let mut y = vec![0.0; 400];
        for t in 1..400 {
            y[t] = x[t] + 0.6 * x[t - 1];
        }
        let m = fit_arima(&y, ArimaOrder { p: 0, d: 0, q: 1 }).unwrap();
        assert!((m.ma[0] - 0.6).abs() < 0.1, "{:?}", m.ma);
        let f = m.forecast(2);
        let expect1 = m.intercept + m.ma[0] * m.residuals.last().unwrap();
        assert!((f.mean[0] - expect1).abs() < 1e-12);
        assert!((f.mean[1] - m.intercept).abs() < 1e-12);
    }

    #[test]
    fn short_and_nonfinite_rejected() {
        assert!(matches!(fit_auto_arima(&[1.0; 9]), Err(Error::TooShort { .. })));
        let mut s = noise(20, 1);
        s[4] = f64::NAN;
        assert!(matches!(fit_auto_arima(&s), Err(Error::NonFinite(4))));
    }

    #[test]
    fn selection_is_deterministic() {
        let s = ar1(200, 0.6, 8);
        let a = fit_auto_arima(&s).unwrap();
        let b = fit_auto_arima(&s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn differencing_rule() {
        assert_eq!(choose_d(&ar1(500, 0.8, 1)), 0);
        let rw: Vec<f64> = noise(300, 2)
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e;
                Some(*acc)
            })
            .collect();
        assert_eq!(choose_d(&rw), 1);
    }
}
