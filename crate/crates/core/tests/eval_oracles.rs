mod common;

use common::*;
use ftscast::eval::{functional_acf, interval_score, mafe_msfe};
use ftscast::{FunctionalTimeSeries, Grid};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn gaussian_curves(n: usize, p: usize, seed: u64) -> FunctionalTimeSeries {
    let mut r = rng(seed);
    FunctionalTimeSeries::new(Grid::equispaced(p, 0.0, 1.0).unwrap(), DMatrix::from_fn(n, p, |_, _| normal(&mut r))).unwrap()
}

#[test]
fn duplicated_lag_shows_up() {
    // rank-one curves, so the lag-0 ratio is 1; pairs repeat, so lag 1 is about 1/2
    let mut r = rng(1);
    let amps: Vec<f64> = (0..150).map(|_| normal(&mut r)).collect();
    let grid = Grid::equispaced(10, 0.0, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|i| grid.points.iter().map(|t| amps[i / 2] * (3.0 * t).sin()).collect())
        .collect();
    let fts = FunctionalTimeSeries::from_rows(grid, &rows).unwrap();
    let acf = functional_acf(&fts, 3).unwrap();
    assert!(acf.values[0] > 0.35 && acf.values[0] > 3.0 * acf.critical, "{:?}", acf.values);
}

#[test]
fn acf_ignores_constant_shift() {
    let fts = gaussian_curves(100, 6, 2);
    let shifted = FunctionalTimeSeries::new(fts.grid().clone(), fts.curves().map(|v| v + 5.0)).unwrap();
    let a = functional_acf(&fts, 5).unwrap();
    let b = functional_acf(&shifted, 5).unwrap();
    assert!(max_abs_diff(&a.values, &b.values) < 1e-12);
}

#[test]
fn acf_matches_direct_double_sum() {
    let fts = gaussian_curves(40, 5, 3);
    let (n, p) = (fts.n(), fts.p());
    let dt = fts.grid().dt;
    let x: Mat = (0..n).map(|i| fts.curve(i)).collect();
    let mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let gamma = |lag: usize, s: usize, t: usize| {
        (0..n - lag).map(|k| (x[k][s] - mean[s]) * (x[k + lag][t] - mean[t])).sum::<f64>() / n as f64
    };
    let denom: f64 = (0..p).map(|t| gamma(0, t, t) * dt).sum();
    let acf = functional_acf(&fts, 4).unwrap();
    for lag in 1..=4 {
        let norm = (0..p)
            .flat_map(|s| (0..p).map(move |t| (s, t)))
            .map(|(s, t)| gamma(lag, s, t).powi(2) * dt * dt)
            .sum::<f64>()
            .sqrt();
        assert!((acf.values[lag - 1] - norm / denom).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn score_at_least_width(l in -5.0f64..5.0, w in 0.0f64..5.0, x in -10.0f64..10.0, alpha in 0.01f64..0.99) {
        let s = interval_score(l, l + w, x, alpha).unwrap();
        prop_assert!(s >= w - 1e-12);
        let inside = x >= l && x <= l + w;
        if inside {
            prop_assert!((s - w).abs() < 1e-12);
        } else {
            prop_assert!(s > w);
        }
    }

    #[test]
    fn mafe_bounded_by_root_msfe(seed in 0u64..500) {
        let a = gaussian_curves(7, 4, seed);
        let f = gaussian_curves(7, 4, seed + 1000);
        let r = mafe_msfe("x", a.curves(), f.curves()).unwrap();
        for (m, s) in r.mafe.iter().zip(&r.msfe) {
            prop_assert!(*m <= s.sqrt() + 1e-12);
        }
    }
}
