use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use fraclab::caputo::{caputo_derivative, CaputoScheme, TimeSeries};
use fraclab::heatflow::heat_kernel_value;
use fraclab::pointops::{fraclap, FracLapMethod};
use fraclab::spectral::torus_fraclap;
use fraclab::walkers::{run_censored_walk, run_classical_walk, WalkConfig};
use fraclab::{Domain, FracOrder, FunctionHandle, GridFunction, QuadratureSpec, Smoothness};

fn pointwise(c: &mut Criterion) {
    let u = FunctionHandle::gaussian().with_support(-6.0, 6.0);
    let q = QuadratureSpec::with_tol(1e-9);
    let mut g = c.benchmark_group("fraclap");
    for s in [0.25, 0.5, 0.75] {
        let s = FracOrder::new(s).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, &s| {
            b.iter(|| fraclap(&u, black_box(0.7), s, &q, FracLapMethod::SecondDifference).unwrap())
        });
    }
    g.finish();
}

fn kernel(c: &mut Criterion) {
    let s = FracOrder::new(0.75).unwrap();
    let mut g = c.benchmark_group("heat_kernel_value");
    for x in [0.5, 3.0, 100.0] {
        g.bench_with_input(BenchmarkId::from_parameter(x), &x, |b, &x| {
            b.iter(|| heat_kernel_value(s, black_box(x)).unwrap())
        });
    }
    g.finish();
}

fn torus(c: &mut Criterion) {
    let s = FracOrder::new(0.4).unwrap();
    let mut g = c.benchmark_group("torus_fraclap");
    for n in [256usize, 4096, 65536] {
        let grid = GridFunction::from_fn(Domain::torus(1.0).unwrap(), n, |x| (6.0 * x).sin().exp()).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| torus_fraclap(grid, s).unwrap())
        });
    }
    g.finish();
}

fn caputo(c: &mut Criterion) {
    let s = FracOrder::new(0.6).unwrap();
    let mut g = c.benchmark_group("caputo_l1");
    for n in [1024usize, 16384] {
        let u = TimeSeries::uniform_from_handle(
            1.0 / n as f64,
            n,
            FunctionHandle::new(Smoothness::C2Local, |t: f64| (-t).exp()),
        )
        .unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &u, |b, u| {
            b.iter(|| caputo_derivative(u, 1.0, s, CaputoScheme::L1).unwrap())
        });
    }
    g.finish();
}

fn walkers(c: &mut Criterion) {
    let mut g = c.benchmark_group("walkers");
    g.sample_size(10);
    g.bench_function("classical_10k", |b| {
        let cfg = WalkConfig::classical(0.02, 0.5, 10_000, 7).unwrap();
        b.iter(|| run_classical_walk(&cfg).unwrap())
    });
    g.bench_function("censored_10k", |b| {
        let dom = Domain::interval(-1.0, 1.0).unwrap();
        let cfg = WalkConfig::censored(1.0 / 128.0, FracOrder::HALF, dom, 0.1, 10_000, 7).unwrap();
        b.iter(|| run_censored_walk(&cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, pointwise, kernel, torus, caputo, walkers);
criterion_main!(benches);
