use ftscast::sim::{simulate_var2, Var2Spec};

/// Spectral radius by power iteration: `||A^k||^(1/k)` for large k.
fn radius_by_powers(spec: &Var2Spec) -> f64 {
    let mut a = [[0.0; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = spec.b1[i][j];
            a[i][j + 2] = spec.b2[i][j];
        }
    }
    a[2][0] = 1.0;
    a[3][1] = 1.0;
    let mut m = a;
    let mut log_scale = 0.0;
    let k = 400;
    for _ in 1..k {
        let mut next = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                next[i][j] = (0..4).map(|l| m[i][l] * a[l][j]).sum();
            }
        }
        let norm = next.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        log_scale += norm.ln();
        for row in next.iter_mut() {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
        m = next;
    }
    (log_scale / (k - 1) as f64).exp()
}

#[test]
fn companion_radius_below_one() {
    let spec = Var2Spec::default();
    let r = spec.spectral_radius();
    assert!(r < 1.0);
    assert!((r - radius_by_powers(&spec)).abs() < 0.02, "{r}");
}

#[test]
fn long_run_mean_is_stationary_mean() {
    let spec = Var2Spec {
        n: 100_000,
        ..Default::default()
    };
    // (I - B1 - B2)^-1 B0 by Cramer's rule
    let a = [[1.0 - 0.5 + 0.3, -0.2 + 0.7], [0.2 + 0.1, 1.0 + 0.5 - 0.3]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let mu = [(10.0 * a[1][1] - 5.0 * a[0][1]) / det, (5.0 * a[0][0] - 10.0 * a[1][0]) / det];
    let x = simulate_var2(&spec, 77).unwrap();
    for k in 0..2 {
        let mean = x.column(k).mean();
        assert!((mean - mu[k]).abs() < 0.02 * mu[k].abs(), "{mean} vs {}", mu[k]);
        assert!((spec.stationary_mean()[k] - mu[k]).abs() < 1e-12);
    }
}

#[test]
fn simulation_is_seeded() {
    let spec = Var2Spec::default();
    assert_eq!(simulate_var2(&spec, 5).unwrap(), simulate_var2(&spec, 5).unwrap());
    assert_ne!(simulate_var2(&spec, 5).unwrap(), simulate_var2(&spec, 6).unwrap());
}
