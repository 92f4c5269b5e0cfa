use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ftscast::fpca::empirical_fpca;
use ftscast::scorecast::Support;
use ftscast::sim::{replication_study, ContaminationMode, SimMethod, StudyConfig};
use ftscast::uncertainty::{bootstrap_pointwise_pi, flr_bootstrap_pi, insample_score_errors, BootstrapConfig};
use ftscast::{par, Forecaster, FpcaVariant, FunctionalTimeSeries, Grid, PartialCurve, Truncation};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn curves(n: usize, p: usize) -> FunctionalTimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut z = || -> f64 { StandardNormal.sample(&mut rng) };
    let mut a = 0.0;
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        a = 0.6 * a + z();
        for j in 0..p {
            let t = j as f64 / p as f64;
            x[(i, j)] = (std::f64::consts::TAU * t).sin() + a * (1.0 + t) + 0.3 * z();
        }
    }
    FunctionalTimeSeries::new(Grid::equispaced(p, 0.0, 1.0).unwrap(), x).unwrap()
}

/// Runs `f` on both paths under the same group.
fn both<F: Fn()>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::from_parameter("parallel"), |b| b.iter(&f));
    g.bench_function(BenchmarkId::from_parameter("sequential"), |b| b.iter(|| par::sequential(&f)));
    g.finish();
}

fn bootstrap(c: &mut Criterion) {
    let fts = curves(150, 48);
    let model = empirical_fpca(&fts, Truncation::Fraction(0.9)).unwrap();
    let forecaster = Forecaster::var();
    let errors = insample_score_errors(model.scores(), &forecaster, 20).unwrap();
    let beta = forecaster.forecast_one(model.scores()).unwrap();
    let cfg = BootstrapConfig { alpha: 0.2, replicates: 1000, seed: 1 };
    both(c, "bootstrap_pointwise_pi", || {
        bootstrap_pointwise_pi(&model, &beta, &errors, Support::Full, &cfg, false).unwrap();
    });
    both(c, "insample_score_errors_var", || {
        insample_score_errors(model.scores(), &forecaster, 20).unwrap();
    });
}

fn flr(c: &mut Criterion) {
    let fts = curves(120, 24);
    let partial = PartialCurve::new(fts.grid().clone(), vec![0.1; 14]).unwrap();
    let cfg = BootstrapConfig { alpha: 0.2, replicates: 200, seed: 2 };
    both(c, "flr_bootstrap_pi", || {
        flr_bootstrap_pi(&fts, &partial, Truncation::Fraction(0.9), &FpcaVariant::Standard, &cfg).unwrap();
    });
}

fn study(c: &mut Criterion) {
    let cfg = StudyConfig {
        reps: 40,
        levels: vec![0, 10],
        mode: ContaminationMode::Curves,
        methods: vec![
            SimMethod { robust: false, forecaster: Forecaster::var() },
            SimMethod { robust: true, forecaster: Forecaster::var() },
        ],
        ..Default::default()
    };
    both(c, "replication_study", || {
        replication_study(&cfg).unwrap();
    });
}

criterion_group!(benches, bootstrap, flr, study);
criterion_main!(benches);
