//! Sequential (one-thread pool) against parallel (default pool) timings of
//! the data-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holodyn::certify::certify_trapping;
use holodyn::endo::family_ftheta;
use holodyn::green::{laplacian_cells, DiskParam, Green};
use holodyn::periodic::{find_periodic, Strategy};
use holodyn::projgeom::C64;
use rayon::{ThreadPool, ThreadPoolBuilder};

fn pools() -> Vec<(&'static str, ThreadPool)> {
    vec![
        ("sequential", ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
        ("parallel", ThreadPoolBuilder::new().build().unwrap()),
    ]
}

fn kernels(c: &mut Criterion) {
    let f = family_ftheta(C64::new(0.01, 0.0)).unwrap();
    let green = Green::new(&f);
    let disk = DiskParam::conic(C64::new(1.0, 0.0), 0.5, 128).unwrap();

    let mut group = c.benchmark_group("kernels");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_with_input(BenchmarkId::new("laplacian_cells", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| laplacian_cells(&green, black_box(&disk), 40).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("certify_trapping", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| certify_trapping(&f, black_box(0.05), 0.025, 10).unwrap()))
        });
        group.bench_with_input(BenchmarkId::new("find_periodic", name), &pool, |b, pool| {
            b.iter(|| pool.install(|| find_periodic(&f, black_box(4), 0.05, Strategy::Both, 1).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
