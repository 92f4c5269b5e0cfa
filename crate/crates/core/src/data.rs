//! Gridded functional time series and the ingestion path from a long
//! univariate series.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization of the function support.
///
/// Inner products use the uniform quadrature `<x, y> = dt * sum_j x_j y_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub support_start: f64,
    pub support_end: f64,
    pub points: Vec<f64>,
    pub dt: f64,
}

impl Grid {
    /// `p` points `start + j * dt`, `j = 1..=p`, with `dt = (end - start) / p`.
    /// For a day split into half hours this gives 0.5, 1.0, ..., 24.0.
    pub fn equispaced(p: usize, start: f64, end: f64) -> Result<Self> {
        if p < 2 {
            return Err(Error::invalid(format!("grid needs p >= 2, got {p}")));
        }
        if !(end > start) {
            return Err(Error::invalid("support end must exceed start"));
        }
        let dt = (end - start) / p as f64;
        let points = (1..=p).map(|j| start + j as f64 * dt).collect();
        Ok(Self {
            support_start: start,
            support_end: end,
            points,
            dt,
        })
    }

    /// Arbitrary strictly increasing points with an explicit quadrature weight.
    pub fn with_points(points: Vec<f64>, dt: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("grid needs at least 2 points"));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid points must be strictly increasing"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("quadrature weight must be positive"));
        }
        Ok(Self {
            support_start: points[0],
            support_end: points[points.len() - 1],
            points,
            dt,
        })
    }

    pub fn p(&self) -> usize {
        self.points.len()
    }

    /// Sub-grid over point indices `range`; keeps the quadrature weight so
    /// block inner products are restrictions of the full one.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Grid {
        let points = self.points[range].to_vec();
        Grid {
            support_start: points[0] - self.dt,
            support_end: points[points.len() - 1],
            points,
            dt: self.dt,
        }
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.dt * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }

    /// Map a wall-clock position on the support to the number of grid points
    /// observed up to and including it.
    pub fn index_at(&self, t: f64) -> usize {
        self.points.iter().take_while(|&&s| s <= t + 1e-9).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateSeries {
    pub values: Vec<f64>,
    pub timestamps: Option<Vec<String>>,
}

impl UnivariateSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            values,
            timestamps: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `n` curves sampled on a common grid; row `i` is curve `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalTimeSeries {
    grid: Grid,
    curves: DMatrix<f64>,
}

impl FunctionalTimeSeries {
    pub fn new(grid: Grid, curves: DMatrix<f64>) -> Result<Self> {
        if curves.nrows() == 0 {
            return Err(Error::Empty);
        }
        if curves.ncols() != grid.p() {
            return Err(Error::shape(
                format!("{} columns", grid.p()),
                format!("{} columns", curves.ncols()),
            ));
        }
        if let Some(i) = curves.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, curves })
    }

    pub fn from_rows(grid: Grid, rows: &[Vec<f64>]) -> Result<Self> {
        let p = grid.p();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::shape(format!("rows of length {p}"), bad.len()));
        }
        let curves = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
        Self::new(grid, curves)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn curves(&self) -> &DMatrix<f64> {
        &self.curves
    }

    pub fn into_curves(self) -> DMatrix<f64> {
        self.curves
    }

    pub fn n(&self) -> usize {
        self.curves.nrows()
    }

    pub fn p(&self) -> usize {
        self.curves.ncols()
    }

    pub fn curve(&self, i: usize) -> Vec<f64> {
        self.curves.row(i).iter().copied().collect()
    }

    /// Row-major concatenation of all curves.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n() * self.p());
        for row in self.curves.row_iter() {
            out.extend(row.iter());
        }
        out
    }

    /// The first `n` curves.
    pub fn head(&self, n: usize) -> Self {
        Self {
            grid: self.grid.clone(),
            curves: self.curves.rows(0, n).into_owned(),
        }
    }

    /// Columns `range` of every curve on the matching sub-grid.
    pub fn block(&self, range: std::ops::Range<usize>) -> Self {
        let grid = self.grid.slice(range.clone());
        let curves = self
            .curves
            .columns(range.start, range.end - range.start)
            .into_owned();
        Self { grid, curves }
    }

    /// Linear combination `a * self + b * other` on the same grid.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.curves.shape() != other.curves.shape() {
            return Err(Error::shape(
                format!("{:?}", self.curves.shape()),
                format!("{:?}", other.curves.shape()),
            ));
        }
        Self::new(self.grid.clone(), &self.curves * a + &other.curves * b)
    }
}

/// The leading `m0` observations of a day that is still in progress.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCurve {
    grid: Grid,
    values: Vec<f64>,
}

impl PartialCurve {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        let m0 = values.len();
        if m0 == 0 || m0 >= grid.p() {
            return Err(Error::invalid(format!(
                "partial curve needs 1 <= m0 < p = {}, got m0 = {m0}",
                grid.p()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn m0(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Cut a long series into consecutive curves of `grid.p()` points:
/// curve `i`, point `j` is `Z[p * i + j]`.
pub fn segment(series: &UnivariateSeries, grid: &Grid) -> Result<FunctionalTimeSeries> {
    let p = grid.p();
    let len = series.len();
    let remainder = len % p;
    if remainder != 0 || len == 0 {
        return Err(Error::NotDivisible { len, p, remainder });
    }
    let curves = DMatrix::from_row_slice(len / p, p, &series.values);
    FunctionalTimeSeries::new(grid.clone(), curves)
}

/// Variance-stabilizing square-root transform and its inverse.
pub trait SqrtTransform: Sized {
    fn sqrt_transform(&self) -> Result<Self>;
    fn square_back(&self) -> Self;
}

impl SqrtTransform for FunctionalTimeSeries {
    fn sqrt_transform(&self) -> Result<Self> {
        for (i, row) in self.curves.row_iter().enumerate() {
            if let Some((j, &v)) = row.iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(Error::Domain {
                    curve: i,
                    point: j,
                    value: v,
                });
            }
        }
        Ok(Self {
            grid: self.grid.clone(),
            curves: self.curves.map(f64::sqrt),
        })
    }

    fn square_back(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            curves: self.curves.map(|v| v * v),
        }
    }
}

impl SqrtTransform for PartialCurve {
    fn sqrt_transform(&self) -> Result<Self> {
        if let Some((j, &v)) = self.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::Domain {
                curve: 0,
                point: j,
                value: v,
            });
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.sqrt()).collect(),
        })
    }

    fn square_back(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * v).collect(),
        }
    }
}

/// Pointwise mean across curves.
pub fn mean_function(fts: &FunctionalTimeSeries) -> Vec<f64> {
    column_means(fts.curves())
}

pub(crate) fn column_means(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows() as f64;
    m.column_iter().map(|c| c.sum() / n).collect()
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            row,
            message: format!("{other:?}"),
        },
    }
}

fn is_header(record: &csv::StringRecord) -> bool {
    record.iter().all(|f| f.parse::<f64>().is_err())
}

/// Read a long series from CSV: either a single `value` column or
/// `timestamp,value`. A non-numeric first line is taken as a header.
/// Row numbers in errors are 1-based file lines.
pub fn ingest_series(path: impl AsRef<Path>) -> Result<UnivariateSeries> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let mut values = Vec::new();
    let mut stamps = Vec::new();
    let mut two_col = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && is_header(&record) {
            continue;
        }
        let width = record.len();
        if width > 2 {
            return Err(Error::Parse {
                row,
                message: format!("expected 1 or 2 columns, found {width}"),
            });
        }
        match two_col {
            None => two_col = Some(width == 2),
            Some(t) if t != (width == 2) => {
                return Err(Error::Parse {
                    row,
                    message: "inconsistent column count".into(),
                })
            }
            _ => {}
        }
        let field = &record[width - 1];
        let v: f64 = field.parse().map_err(|_| Error::Parse {
            row,
            message: format!("non-numeric value {field:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                row,
                message: format!("non-finite value {field:?}"),
            });
        }
        values.push(v);
        if width == 2 {
            stamps.push(record[0].to_string());
        }
    }
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(UnivariateSeries {
        values,
        timestamps: (two_col == Some(true)).then_some(stamps),
    })
}

/// Read a dense numeric matrix (one row per line). A non-numeric first line
/// is skipped as a header.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if idx == 0 && is_header(&record) {
            continue;
        }
        let parsed = record
            .iter()
            .map(|f| {
                f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    row,
                    message: format!("non-numeric value {f:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != parsed.len() {
                return Err(Error::Parse {
                    row,
                    message: format!("expected {} columns, found {}", first.len(), parsed.len()),
                });
            }
        }
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    Ok(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}

pub(crate) fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// Write a matrix as headerless CSV, one row per line, shortest round-trip
/// float formatting.
pub fn write_matrix_csv(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create_file(path)?;
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}
