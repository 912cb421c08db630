//! Compares the data-parallel fold against the always-available
//! sequential fallback on three representative workloads. Built with the
//! default features this exercises the rayon path; with
//! `--no-default-features` both benches run the sequential engine, which
//! makes the overhead of the dispatch itself visible.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use schinzel_core::exec::{map_fold_sequential, SHARD_SIZE};
use schinzel_core::model::OmegaSpec;
use schinzel_core::polyff::CoeffBox;
use schinzel_core::Budget;

/// Sum of a cheap arithmetic kernel over a range: pure fold overhead.
fn kernel_sum(range: (u128, u128)) -> u64 {
    let mut acc = 0u64;
    for i in range.0..range.1 {
        let v = i as u64;
        acc = acc.wrapping_add(v.wrapping_mul(v) ^ v.rotate_left(7));
    }
    acc
}

fn bench_raw_fold(c: &mut Criterion) {
    let total: u128 = 1 << 22;
    let mut group = c.benchmark_group("raw-fold");
    group.bench_with_input(BenchmarkId::new("sequential", total), &total, |b, &n| {
        b.iter(|| {
            map_fold_sequential(n, SHARD_SIZE, kernel_sum, 0u64, |a, p| a.wrapping_add(p))
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_with_input(BenchmarkId::new("parallel", total), &total, |b, &n| {
        b.iter(|| {
            schinzel_core::exec::map_fold_parallel(n, SHARD_SIZE, kernel_sum, 0u64, |a, p| {
                a.wrapping_add(p)
            })
        })
    });
    group.finish();
}

fn bench_moment_verification(c: &mut Criterion) {
    // Exhaustive enumeration of the degree-(2,2) sample space at ell = 5:
    // 5^6 tuples of digit decoding plus polynomial evaluation.
    let spec = OmegaSpec::new(5, vec![2, 2]).unwrap();
    let budget = Budget { enum_tuples: 1 << 30, ..Budget::default() };
    let mut group = c.benchmark_group("moment-verification");
    group.sample_size(20);
    group.bench_function("default-engine", |b| {
        b.iter(|| schinzel_core::model::verify_moments(&spec, &budget).unwrap())
    });
    group.finish();
}

fn bench_dispersion(c: &mut Criterion) {
    use schinzel_core::counting::{dispersion, DispersionMode};
    // Exhaustive dispersion over the degree-1 height-12 box: prime tests
    // against theta on every one of the 300 tuples.
    let cbox = CoeffBox::unconstrained(vec![1], 12).unwrap();
    let budget = Budget::default();
    let mut group = c.benchmark_group("dispersion");
    group.sample_size(10);
    group.bench_function("default-engine", |b| {
        b.iter(|| {
            dispersion(&cbox, 40.0, DispersionMode::Exhaustive, 0, false, &budget).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_raw_fold, bench_moment_verification, bench_dispersion);
criterion_main!(benches);
