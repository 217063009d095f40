use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;
use valshare_bench::{cubic_ode, double_sine, square, thm2prime};
use valshare_core::expr::{check_identity, IdentityMode, IdentityOptions};
use valshare_core::families::{classify_cubic, derive_family_constants, CubicCurve};
use valshare_core::nevanlinna::{characteristic, log_derivative_proximity};
use valshare_core::roots::{locate, LocateOptions};
use valshare_core::Scalar;

fn evaluation(c: &mut Criterion) {
    let f = thm2prime().compile();
    let z = Complex64::new(0.3, 1.7);
    c.bench_function("numeric_sum_eval", |b| b.iter(|| f.eval(black_box(z))));
    c.bench_function("numeric_sum_jet4", |b| b.iter(|| f.derivatives(black_box(z), 4)));
}

fn identity(c: &mut Criterion) {
    let (e, env) = cubic_ode();
    let mut g = c.benchmark_group("identity");
    for mode in [IdentityMode::Exact, IdentityMode::Sampled] {
        let opts = IdentityOptions { mode, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &opts, |b, o| {
            b.iter(|| check_identity(&e, &env, o).unwrap())
        });
    }
    g.finish();
}

fn roots(c: &mut Criterion) {
    let f = double_sine();
    let opts = LocateOptions::default();
    let mut g = c.benchmark_group("locate_double_points");
    g.sample_size(20);
    for h in [2.0, 4.0, 8.0] {
        let r = square(h);
        g.bench_with_input(BenchmarkId::from_parameter(h), &r, |b, r| {
            b.iter(|| locate(&f, Complex64::new(0.5, 0.0), r, &opts).unwrap())
        });
    }
    g.finish();
}

fn nevanlinna(c: &mut Criterion) {
    let f = double_sine();
    let mut g = c.benchmark_group("nevanlinna");
    g.sample_size(20);
    for r in [10.0, 100.0] {
        g.bench_with_input(BenchmarkId::new("characteristic", r), &r, |b, &r| {
            b.iter(|| characteristic(&f, r).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("log_derivative", r), &r, |b, &r| {
            b.iter(|| log_derivative_proximity(&f, r).unwrap())
        });
    }
    g.finish();
}

fn families(c: &mut Criterion) {
    c.bench_function("derive_family_constants", |b| {
        b.iter(|| derive_family_constants(black_box(&Scalar::one())).unwrap())
    });
    let curve = CubicCurve::new("4/27".parse().unwrap(), Scalar::zero(), Scalar::zero(), Scalar::int(-1));
    c.bench_function("classify_cubic", |b| b.iter(|| classify_cubic(black_box(&curve)).unwrap()));
}

criterion_group!(benches, evaluation, identity, roots, nevanlinna, families);
criterion_main!(benches);
