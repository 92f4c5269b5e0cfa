mod common;

use common::*;
use ftscast::fpca::{FpcaVariant, Truncation};
use ftscast::scorecast::{ts_forecast_curve, Forecaster, Support};
use ftscast::update::{bm_forecast, bm_rotate, flr_fit, flr_predict};
use ftscast::{FunctionalTimeSeries, Grid, PartialCurve};
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #[test]
    fn rotation_preserves_the_flattened_series(n in 2usize..8, p in 2usize..9, m0_frac in 0.0f64..1.0, seed in 0u64..1000) {
        let m0 = 1 + ((p - 1) as f64 * m0_frac) as usize % (p - 1);
        let mut r = rng(seed);
        let grid = Grid::equispaced(p, 0.0, 1.0).unwrap();
        let fts = FunctionalTimeSeries::new(grid.clone(), DMatrix::from_fn(n, p, |_, _| normal(&mut r))).unwrap();
        let head: Vec<f64> = (0..m0).map(|_| normal(&mut r)).collect();
        let partial = PartialCurve::new(grid, head.clone()).unwrap();
        let rotated = bm_rotate(&fts, &partial).unwrap();
        let mut want = fts.flatten()[m0..].to_vec();
        want.extend_from_slice(&head);
        prop_assert_eq!(rotated.fts.flatten(), want);
        prop_assert_eq!(rotated.fts.n(), n);
        prop_assert_eq!(rotated.discarded, fts.flatten()[..m0].to_vec());
    }
}

/// Late block an exact linear function of the early block.
fn linear_days(n: usize, p: usize, m0: usize, noise: f64, seed: u64) -> FunctionalTimeSeries {
    let mut r = rng(seed);
    let map: Vec<Vec<f64>> = (0..p - m0).map(|_| (0..m0).map(|_| normal(&mut r) / m0 as f64).collect()).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let early: Vec<f64> = (0..m0).map(|_| normal(&mut r)).collect();
            let late: Vec<f64> = map
                .iter()
                .map(|w| w.iter().zip(&early).map(|(a, b)| a * b).sum::<f64>() + noise * normal(&mut r))
                .collect();
            early.iter().copied().chain(late).collect()
        })
        .collect();
    FunctionalTimeSeries::from_rows(Grid::equispaced(p, 0.0, 1.0).unwrap(), &rows).unwrap()
}

#[test]
fn flr_recovers_exact_linear_map() {
    let (p, m0) = (10, 4);
    let fts = linear_days(80, p, m0, 0.0, 21);
    let history = fts.head(79);
    let today = fts.curve(79);
    let model = flr_fit(&history, m0, Truncation::Fraction(1.0), &FpcaVariant::Standard).unwrap();
    let partial = PartialCurve::new(fts.grid().clone(), today[..m0].to_vec()).unwrap();
    let pred = flr_predict(&model, &partial).unwrap();
    assert!(max_abs_diff(&pred, &today[m0..]) < 1e-8);

    let ts = FpcaVariant::Standard.fit(&history, Truncation::Fraction(0.9)).unwrap();
    let beta = Forecaster::var().forecast_one(ts.scores()).unwrap();
    let ts_pred = ts_forecast_curve(&ts, &beta, Support::Remaining(m0)).unwrap();
    assert!(max_abs_diff(&ts_pred, &today[m0..]) > 1e-3);
}

#[test]
fn bm_remaining_has_day_length() {
    let fts = linear_days(40, 8, 3, 0.1, 22);
    let partial = PartialCurve::new(fts.grid().clone(), fts.curve(39)[..3].to_vec()).unwrap();
    let rotated = bm_rotate(&fts.head(39), &partial).unwrap();
    let f = bm_forecast(&rotated, Truncation::Fraction(0.9), &FpcaVariant::Standard, &Forecaster::var()).unwrap();
    assert_eq!(f.remaining.len(), 5);
    assert_eq!(f.next_head.len(), 3);
}

#[test]
fn flr_needs_enough_curves() {
    let fts = linear_days(5, 10, 4, 0.0, 23);
    assert!(flr_fit(&fts, 4, Truncation::Fraction(1.0), &FpcaVariant::Standard).is_err());
}
