//! Interval forecasts: residual bootstrap for score-based forecasts, maximum
//! entropy bootstrap for functional linear regression, and uniform bands.

mod band;
mod bootstrap;
mod flr;
mod meboot;

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub use band::{prediction_band, UniformBand, GAMMA_FLOOR, MIN_BAND_RESIDUALS};
pub use bootstrap::{bootstrap_pointwise_pi, insample_curve_errors, insample_score_errors, DEFAULT_MIN_TRAINING};
pub use flr::{flr_bootstrap_pi, flr_bootstrap_pi_with};
pub use meboot::{meboot, meboot_with, MebootParts, TRIM};

use crate::error::{Error, Result};
use crate::linalg::ceil_tol;

pub const MIN_REPLICATES: usize = 100;
pub const DEFAULT_REPLICATES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BootstrapConfig {
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            alpha: 0.2,
            replicates: DEFAULT_REPLICATES,
            seed: 1,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(format!(
                "{} bootstrap replicates requested, at least {MIN_REPLICATES} required",
                self.replicates
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointwiseInterval {
    /// Nominal coverage `1 - alpha`.
    pub level: f64,
    pub point: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub replicates: usize,
    #[serde(skip)]
    pub samples: Option<Vec<Vec<f64>>>,
}

impl PointwiseInterval {
    pub(crate) fn from_samples(point: Vec<f64>, samples: Vec<Vec<f64>>, alpha: f64, keep: bool) -> Self {
        let (lower, upper) = pointwise_quantiles(&samples, alpha);
        PointwiseInterval {
            level: 1.0 - alpha,
            point,
            replicates: samples.len(),
            lower,
            upper,
            samples: keep.then_some(samples),
        }
    }

    /// Recompute the bounds at another level from retained samples.
    pub fn at_alpha(&self, alpha: f64) -> Option<PointwiseInterval> {
        let samples = self.samples.as_ref()?;
        let (lower, upper) = pointwise_quantiles(samples, alpha);
        Some(PointwiseInterval {
            level: 1.0 - alpha,
            point: self.point.clone(),
            lower,
            upper,
            replicates: self.replicates,
            samples: None,
        })
    }

    pub fn width(&self) -> Vec<f64> {
        self.upper.iter().zip(&self.lower).map(|(u, l)| u - l).collect()
    }

    /// CSV with columns `t,point,lower,upper,level`.
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
        writeln!(w, "t,point,lower,upper,level").map_err(io)?;
        for j in 0..t.len() {
            writeln!(w, "{},{},{},{},{}", t[j], self.point[j], self.lower[j], self.upper[j], self.level).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Order statistics `ceil(B alpha/2)` and `ceil(B (1 - alpha/2))` per point.
pub fn pointwise_quantiles(samples: &[Vec<f64>], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let b = samples.len();
    let len = samples.first().map_or(0, Vec::len);
    let lo = ceil_tol(b as f64 * alpha / 2.0).clamp(1, b.max(1)) - 1;
    let hi = ceil_tol(b as f64 * (1.0 - alpha / 2.0)).clamp(1, b.max(1)) - 1;
    let mut column = vec![0.0; b];
    let mut lower = Vec::with_capacity(len);
    let mut upper = Vec::with_capacity(len);
    for j in 0..len {
        for (c, s) in column.iter_mut().zip(samples) {
            *c = s[j];
        }
        column.sort_by(f64::total_cmp);
        lower.push(column[lo]);
        upper.push(column[hi]);
    }
    (lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_rule() {
        let samples: Vec<Vec<f64>> = (1..=100).map(|v| vec![v as f64, -(v as f64)]).collect();
        let (l, u) = pointwise_quantiles(&samples, 0.2);
        assert_eq!(l, vec![10.0, -91.0]);
        assert_eq!(u, vec![90.0, -11.0]);
    }

    #[test]
    fn config_checks() {
        assert!(BootstrapConfig::default().validate().is_ok());
        let small = BootstrapConfig {
            replicates: 99,
            ..Default::default()
        };
        assert!(small.validate().is_err());
        let bad = BootstrapConfig {
            alpha: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
