//! Forecast accuracy: pointwise MAFE/MSFE, interval scores and the
//! functional autocorrelation of residual curves.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{create_file, FunctionalTimeSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub method: String,
    /// Number of holdout curves.
    pub q: usize,
    pub mafe: Vec<f64>,
    pub msfe: Vec<f64>,
    pub mean_mafe: f64,
    pub mean_msfe: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub interval_score: Option<Vec<f64>>,
    #[serde(default)]
    pub mean_interval_score: Option<f64>,
}

fn average(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Per-point mean absolute and squared errors over the rows (holdout curves).
pub fn mafe_msfe(method: impl Into<String>, actuals: &DMatrix<f64>, forecasts: &DMatrix<f64>) -> Result<AccuracyReport> {
    if actuals.shape() != forecasts.shape() {
        return Err(Error::shape(
            format!("{:?}", actuals.shape()),
            format!("{:?}", forecasts.shape()),
        ));
    }
    let (q, p) = actuals.shape();
    if q == 0 {
        return Err(Error::Empty);
    }
    let mut mafe = vec![0.0; p];
    let mut msfe = vec![0.0; p];
    for i in 0..q {
        for j in 0..p {
            let e = actuals[(i, j)] - forecasts[(i, j)];
            mafe[j] += e.abs();
            msfe[j] += e * e;
        }
    }
    for j in 0..p {
        mafe[j] /= q as f64;
        msfe[j] /= q as f64;
    }
    Ok(AccuracyReport {
        method: method.into(),
        q,
        mean_mafe: average(&mafe),
        mean_msfe: average(&msfe),
        mafe,
        msfe,
        alpha: None,
        interval_score: None,
        mean_interval_score: None,
    })
}

/// Width plus `2/alpha` times the distance by which `x` falls outside.
pub fn interval_score(lower: f64, upper: f64, x: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha = {alpha} outside (0, 1)")));
    }
    if lower > upper {
        return Err(Error::invalid(format!("interval lower {lower} exceeds upper {upper}")));
    }
    let penalty = if x < lower {
        lower - x
    } else if x > upper {
        x - upper
    } else {
        0.0
    };
    Ok((upper - lower) + 2.0 / alpha * penalty)
}

/// Per-point mean interval score over the holdout rows.
pub fn mean_interval_score(
    lower: &DMatrix<f64>,
    upper: &DMatrix<f64>,
    actuals: &DMatrix<f64>,
    alpha: f64,
) -> Result<Vec<f64>> {
    if lower.shape() != actuals.shape() || upper.shape() != actuals.shape() {
        return Err(Error::shape(format!("{:?}", actuals.shape()), "mismatched interval bounds"));
    }
    let (q, p) = actuals.shape();
    if q == 0 {
        return Err(Error::Empty);
    }
    let mut out = vec![0.0; p];
    for i in 0..q {
        for (j, o) in out.iter_mut().enumerate() {
            *o += interval_score(lower[(i, j)], upper[(i, j)], actuals[(i, j)], alpha)?;
        }
    }
    Ok(out.into_iter().map(|v| v / q as f64).collect())
}

impl AccuracyReport {
    pub fn with_intervals(mut self, scores: Vec<f64>, alpha: f64) -> Result<Self> {
        if scores.len() != self.mafe.len() {
            return Err(Error::shape(self.mafe.len(), scores.len()));
        }
        self.mean_interval_score = Some(average(&scores));
        self.interval_score = Some(scores);
        self.alpha = Some(alpha);
        Ok(self)
    }

    /// Long-format rows `(metric, j, value)` with `j` starting at `first_j`.
    pub fn tidy_rows(&self, first_j: usize) -> Vec<(&'static str, usize, f64)> {
        let mut rows = Vec::new();
        let mut push = |name: &'static str, v: &[f64]| {
            rows.extend(v.iter().enumerate().map(|(j, x)| (name, first_j + j, *x)));
        };
        push("mafe", &self.mafe);
        push("msfe", &self.msfe);
        if let Some(s) = &self.interval_score {
            push("interval_score", s);
        }
        rows
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }
}

pub(crate) fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
}

pub fn read_report_json(path: impl AsRef<Path>) -> Result<AccuracyReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

/// One tidy CSV `method,metric,j,value` for several reports. `first_j` is the
/// 1-based grid index of each report's first point.
pub fn write_tidy_csv(path: impl AsRef<Path>, reports: &[(&AccuracyReport, usize)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_writer(create_file(path)?);
    let err = |e: csv::Error| Error::Parse {
        row: 0,
        message: format!("{}: {e}", path.display()),
    };
    w.write_record(["method", "metric", "j", "value"]).map_err(err)?;
    for (report, first_j) in reports {
        for (metric, j, value) in report.tidy_rows(*first_j) {
            w.write_record([report.method.as_str(), metric, &j.to_string(), &value.to_string()])
                .map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TidyRow {
    pub method: String,
    pub metric: String,
    pub j: usize,
    pub value: f64,
}

pub fn read_tidy_csv(path: impl AsRef<Path>) -> Result<Vec<TidyRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Parse {
        row: 0,
        message: format!("{}: {e}", path.display()),
    })?;
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse {
                row: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalAcf {
    /// `rho_1..rho_L`.
    pub values: Vec<f64>,
    pub critical: f64,
    pub n: usize,
}

impl FunctionalAcf {
    pub fn fraction_below_critical(&self) -> f64 {
        self.values.iter().filter(|v| **v < self.critical).count() as f64 / self.values.len() as f64
    }
}

/// `rho_i = ||gamma_i|| / int gamma_0(t, t) dt` for lags `1..=max_lag`, with
/// `gamma_i(s, t) = n^-1 sum_k r_k(s) r_{k+i}(t)` on centered curves.
pub fn functional_acf(residuals: &FunctionalTimeSeries, max_lag: usize) -> Result<FunctionalAcf> {
    let n = residuals.n();
    if max_lag == 0 || max_lag >= n {
        return Err(Error::invalid(format!("max lag {max_lag} must lie in 1..{n}")));
    }
    let dt = residuals.grid().dt;
    let x = residuals.curves();
    let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
    let c = DMatrix::from_fn(n, x.ncols(), |i, j| x[(i, j)] - means[j]);
    let trace = c.iter().map(|v| v * v).sum::<f64>() / n as f64 * dt;
    let values = (1..=max_lag)
        .map(|lag| {
            if trace == 0.0 {
                return 0.0;
            }
            let a = c.rows(0, n - lag);
            let b = c.rows(lag, n - lag);
            let gamma = a.transpose() * b / n as f64;
            gamma.norm() * dt / trace
        })
        .collect();
    Ok(FunctionalAcf {
        values,
        critical: 1.96 / (n as f64).sqrt(),
        n,
    })
}
