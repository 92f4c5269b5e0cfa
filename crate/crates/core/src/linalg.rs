//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a design is rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix, eigenvalues in nonincreasing
/// order. Each eigenvector is flipped so its largest-magnitude entry (first
/// one on ties) is positive.
pub fn sym_eigen_desc(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let mut best = 0;
        for i in 1..n {
            if v[i].abs() > v[best].abs() {
                best = i;
            }
        }
        if v[best] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

/// Least squares `argmin_B ||Y - X B||` through an SVD. An exactly (to
/// [`RANK_TOL`]) rank-deficient design is reported as an error rather than
/// resolved with a pseudo-inverse.
pub fn ols(x: &DMatrix<f64>, y: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if x.nrows() != y.nrows() {
        return Err(Error::shape(format!("{} rows", x.nrows()), y.nrows()));
    }
    if x.ncols() == 0 {
        return Ok(DMatrix::zeros(0, y.ncols()));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::Collinear(what));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(Error::Collinear(what));
    }
    svd.solve(y, 0.0).map_err(|_| Error::Collinear(what))
}

pub fn ols_vec(x: &DMatrix<f64>, y: &[f64], what: &'static str) -> Result<Vec<f64>> {
    let y = DMatrix::from_column_slice(y.len(), 1, y);
    Ok(ols(x, &y, what)?.column(0).iter().copied().collect())
}

/// Median of a slice (mean of the middle pair for even lengths).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance (divisor n).
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

/// `ceil(x)` that treats values within 1e-9 of an integer as that integer,
/// so `1000 * 0.1` maps to 100 rather than 101.
pub(crate) fn ceil_tol(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}
