use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use tensoraudit::generate::random_uniform;
use tensoraudit::hosvd::HosvdSolver;
use tensoraudit::init::{make_init_bundle, make_init_bundle_rank};
use tensoraudit::linalg::sym_eig_all;
use tensoraudit::parafac::ParafacSolver;
use tensoraudit::rng::SplitMix64;
use tensoraudit::FactorMatrix;

fn hosvd_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("hosvd_sweep");
    for n in [20, 40] {
        let x = random_uniform([n, n, n], 1);
        let bundle = make_init_bundle(&x, [5, 5, 5], 2).unwrap();
        let s = &bundle.starts[1];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut solver = HosvdSolver::new(&x, [5, 5, 5], &s.v0, &s.w0).unwrap();
            b.iter(|| black_box(solver.step().unwrap()));
        });
    }
    group.finish();
}

fn parafac_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("parafac_sweep");
    for n in [20, 40] {
        let x = random_uniform([n, n, n], 3);
        let bundle = make_init_bundle_rank(&x, 5, 4).unwrap();
        let s = &bundle.starts[1];
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            let mut solver = ParafacSolver::new(&x, &s.v0, &s.w0).unwrap();
            b.iter(|| black_box(solver.step().unwrap()));
        });
    }
    group.finish();
}

fn eigensolver(c: &mut Criterion) {
    let mut group = c.benchmark_group("sym_eig_all");
    // 64 is the last size handled by Jacobi, 65 the first by Householder + QL.
    for n in [10, 64, 65, 100] {
        let mut rng = SplitMix64::new(n as u64);
        let a = FactorMatrix::from_fn(n, n + 3, |_, _| rng.next_f64()).gram_rows();
        group.bench_with_input(BenchmarkId::from_parameter(n), &a, |b, a| {
            b.iter(|| black_box(sym_eig_all(a).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, hosvd_sweep, parafac_sweep, eigensolver);
criterion_main!(benches);
