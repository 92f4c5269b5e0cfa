use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::ceil_tol;

pub const GAMMA_FLOOR: f64 = 1e-8;
pub const MIN_BAND_RESIDUALS: usize = 10;

/// Simultaneous band `point ± xi * gamma(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBand {
    pub coverage: f64,
    pub xi: f64,
    pub gamma: Vec<f64>,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `max_t |e_k(t)| / gamma(t)` for each residual curve, in input order.
    pub sup_ratios: Vec<f64>,
}

/// Calibrate the band on residual curves (rows of `residuals`): `gamma` is
/// the pointwise sample standard deviation and `xi` the smallest sup-ratio
/// order statistic that covers at least `coverage` of the curves.
pub fn prediction_band(point: &[f64], residuals: &DMatrix<f64>, coverage: f64) -> Result<UniformBand> {
    let (n, p) = residuals.shape();
    if !(coverage > 0.0 && coverage < 1.0) {
        return Err(Error::invalid(format!("band coverage {coverage} outside (0, 1)")));
    }
    if n < MIN_BAND_RESIDUALS {
        return Err(Error::TooShort {
            needed: MIN_BAND_RESIDUALS,
            got: n,
        });
    }
    if point.len() != p {
        return Err(Error::shape(p, point.len()));
    }
    let gamma: Vec<f64> = residuals
        .column_iter()
        .map(|c| {
            let m = c.mean();
            let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
            var.sqrt().max(GAMMA_FLOOR)
        })
        .collect();
    let sup_ratios: Vec<f64> = residuals
        .row_iter()
        .map(|r| r.iter().zip(&gamma).map(|(e, g)| e.abs() / g).fold(0.0, f64::max))
        .collect();
    let mut sorted = sup_ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let xi = sorted[ceil_tol(coverage * n as f64).clamp(1, n) - 1];
    let lower = point.iter().zip(&gamma).map(|(f, g)| f - xi * g).collect();
    let upper = point.iter().zip(&gamma).map(|(f, g)| f + xi * g).collect();
    Ok(UniformBand {
        coverage,
        xi,
        gamma,
        point: point.to_vec(),
        lower,
        upper,
        sup_ratios,
    })
}

impl UniformBand {
    pub fn contains(&self, curve: &[f64]) -> bool {
        curve.len() == self.point.len()
            && curve
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (l, u))| *l <= *x && *x <= *u)
    }

    /// CSV with columns `t,point,lower,upper,level,xi,gamma`.
    pub fn write_csv(&self, path: impl AsRef<Path>, t: &[f64]) -> Result<()> {
        if t.len() != self.point.len() {
            return Err(Error::shape(self.point.len(), t.len()));
        }
        let path = path.as_ref();
        let mut w = crate::data::create_file(path)?;
        let io = |e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        writeln!(w, "t,point,lower,upper,level,xi,gamma").map_err(io)?;
        for j in 0..t.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                t[j], self.point[j], self.lower[j], self.upper[j], self.coverage, self.xi, self.gamma[j]
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }
}
