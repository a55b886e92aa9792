use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fmpd::dynamics::{initial_spinoptics3, ClosureSpec};
use fmpd::geometry::identity_residuals;
use fmpd::integrator::{integrate, IntegratorConfig};
use fmpd::parallel::{map, map_sequential};
use fmpd::spaces::{self, Params};

fn identity_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("identity-sweep");
    group.sample_size(10);
    for name in ["randers-axisym3", "finsler-schwarzschild"] {
        let d = spaces::build(name, &Params::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let points: Vec<_> = (0..64).map(|_| d.sample_point(&mut rng)).collect();
        let eval = |(x, y): &(Vec<f64>, Vec<f64>)| identity_residuals(&d.space, x, y).unwrap();
        group.bench_with_input(BenchmarkId::new("sequential", name), &points, |b, p| {
            b.iter(|| black_box(map_sequential(p, eval)))
        });
        group.bench_with_input(BenchmarkId::new("parallel", name), &points, |b, p| {
            b.iter(|| black_box(map(p, eval)))
        });
    }
    group.finish();
}

fn ray_bundle(c: &mut Criterion) {
    let d = spaces::build("randers-axisym3", &Params::new()).unwrap();
    let spec = ClosureSpec::spinoptics3(1.0, 0.1, 1.0).unwrap();
    let initials: Vec<_> = (0..32)
        .map(|k| {
            let a = 0.05 * k as f64;
            initial_spinoptics3(&d.space, &[0.5, -0.2, 0.0], &[a.cos() * 0.3, a.sin() * 0.3, 1.0], 1.0, 0.1).unwrap()
        })
        .collect();
    let cfg = IntegratorConfig {
        tau_end: 5.0,
        rel_tol: 1e-8,
        abs_tol: 1e-11,
        ..IntegratorConfig::default()
    };
    let run = |s: &_| integrate(&d.space, &spec, s, &cfg).unwrap().steps.len();
    let mut group = c.benchmark_group("ray-bundle");
    group.sample_size(10);
    group.bench_function("sequential", |b| b.iter(|| black_box(map_sequential(&initials, run))));
    group.bench_function("parallel", |b| b.iter(|| black_box(map(&initials, run))));
    group.finish();
}

criterion_group!(benches, identity_sweep, ray_bundle);
criterion_main!(benches);
