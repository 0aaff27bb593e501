use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use steklov_bench::{disk, disk_eigenfunction, thickened_triangle};
use steklov_core::fem::SteklovSolver;
use steklov_core::graphs::{prescribe_spectrum, PrescribeOptions};
use steklov_core::nodal::{decompose_nodal, DEFAULT_ZERO_TOL};
use steklov_core::thickening::build_thickened_mesh;

fn spectrum(c: &mut Criterion) {
    let mut g = c.benchmark_group("steklov_spectrum");
    g.sample_size(10);
    for h in [0.08, 0.04, 0.02] {
        let m = disk(h);
        g.bench_with_input(BenchmarkId::new("disk", h), &m, |b, m| {
            b.iter(|| SteklovSolver::new(m).and_then(|s| s.spectrum(8, None)).unwrap())
        });
    }
    g.finish();
}

fn prescribe(c: &mut Criterion) {
    let mut g = c.benchmark_group("prescribe_spectrum");
    for n in [2usize, 4, 6] {
        let targets: Vec<f64> = (1..=n).map(|k| 0.5 + k as f64 * 0.7).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &targets, |b, t| {
            b.iter(|| prescribe_spectrum(black_box(t), &PrescribeOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn nodal(c: &mut Criterion) {
    let (m, f) = disk_eigenfunction(0.02);
    c.bench_function("decompose_nodal/disk_0.02", |b| {
        b.iter(|| decompose_nodal(&m, black_box(&f), DEFAULT_ZERO_TOL).unwrap())
    });
}

fn thicken(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_thickened_mesh");
    g.sample_size(10);
    for eps in [0.04, 0.02] {
        let s = thickened_triangle(eps);
        g.bench_with_input(BenchmarkId::new("triangle", eps), &s, |b, s| b.iter(|| build_thickened_mesh(s).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, spectrum, prescribe, nodal, thicken);
criterion_main!(benches);
