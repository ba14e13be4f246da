use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fdban_core::classes::{iso_group, orbit_covering_estimate, OrbitSpace};
use fdban_core::constructions::pushout_amalgam;
use fdban_core::metrics::{banach_mazur, best_embedding, embedding_defect, operator_norm_of};
use fdban_core::{LinearMap, Matrix, NormedSpace};

fn sp(p: f64, n: usize) -> NormedSpace {
    NormedSpace::lp(p, n).unwrap()
}

fn operator_norms(c: &mut Criterion) {
    let m = Matrix::from_rows_f64(&[vec![1.0, 0.5, -0.25], vec![0.3, -1.0, 0.7], vec![0.2, 0.1, 1.0]]).unwrap();
    let mut g = c.benchmark_group("operator_norm");
    for (name, e, f) in [
        ("l1-l1", sp(1.0, 3), sp(1.0, 3)),
        ("l2-l2", sp(2.0, 3), sp(2.0, 3)),
        ("l1-l3", sp(1.0, 3), sp(3.0, 3)),
        ("l3-l1", sp(3.0, 3), sp(1.0, 3)),
    ] {
        g.bench_function(name, |b| b.iter(|| operator_norm_of(black_box(&e), black_box(&f), black_box(&m))));
    }
    g.finish();
}

fn defects(c: &mut Criterion) {
    let e = sp(1.0, 2);
    let f = sp(f64::INFINITY, 3);
    let t = LinearMap::new(&e, &f, Matrix::from_rows_f64(&[vec![1.0, 1.0], vec![1.0, -1.0], vec![0.5, 0.0]]).unwrap())
        .unwrap();
    c.bench_function("embedding_defect/l1-linf", |b| b.iter(|| embedding_defect(black_box(&t))));
}

fn searches(c: &mut Criterion) {
    let mut g = c.benchmark_group("search");
    g.sample_size(10);
    g.bench_function("best_embedding/l2-l1", |b| {
        b.iter(|| best_embedding(&sp(2.0, 2), &sp(1.0, 3), black_box(200), 1).unwrap())
    });
    g.bench_function("banach_mazur/l1-linf", |b| {
        b.iter(|| banach_mazur(&sp(1.0, 2), &sp(f64::INFINITY, 2), black_box(200), 1).unwrap())
    });
    g.finish();
}

fn groups_and_amalgams(c: &mut Criterion) {
    c.bench_function("iso_group/l1-3", |b| b.iter(|| iso_group(black_box(&sp(1.0, 3))).unwrap()));
    let f = sp(1.0, 2);
    let g = sp(1.0, 3);
    let inc = LinearMap::new(&f, &g, Matrix::identity(2).vstack(&Matrix::zeros(1, 2)).unwrap()).unwrap();
    let id = LinearMap::identity(&f);
    c.bench_function("pushout/l1", |b| b.iter(|| pushout_amalgam(black_box(&id), &inc, &inc).unwrap()));
}

fn orbits(c: &mut Criterion) {
    let mut g = c.benchmark_group("orbit_covering");
    g.sample_size(10);
    for n in [4usize, 8] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| orbit_covering_estimate(OrbitSpace::Lp { p: 1.0, n }, 1, None, 0.2, 2_000, 1).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, operator_norms, defects, searches, groups_and_amalgams, orbits);
criterion_main!(benches);
