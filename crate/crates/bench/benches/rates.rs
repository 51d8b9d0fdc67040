use std::hint::black_box;

use cachelab_bench::{multi_user_instance, multi_user_memories, single_user_instance, single_user_memories};
use cachelab_core::bounds::{lower_bound_single_user, optimize_lower_bound_mu};
use cachelab_core::multi_user::rate_memory_sharing;
use cachelab_core::single_level::{deliver, place, worst_case_demands};
use cachelab_core::single_user::rate_clustering;
use cachelab_core::Memory;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn multi_user(c: &mut Criterion) {
    let config = multi_user_instance();
    let mut group = c.benchmark_group("multi_user");
    for m in multi_user_memories() {
        group.bench_with_input(BenchmarkId::new("memory_sharing", &m), &m, |b, m| {
            b.iter(|| rate_memory_sharing(black_box(&config), m).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("lower_bound", &m), &m, |b, m| {
            b.iter(|| optimize_lower_bound_mu(black_box(&config), m).unwrap())
        });
    }
    group.finish();
}

fn single_user(c: &mut Criterion) {
    let config = single_user_instance();
    let mut group = c.benchmark_group("single_user");
    for m in single_user_memories() {
        group.bench_with_input(BenchmarkId::new("clustering", &m), &m, |b, m| {
            b.iter(|| rate_clustering(black_box(&config), m).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("lower_bound", &m), &m, |b, m| {
            b.iter(|| lower_bound_single_user(black_box(&config), m).unwrap())
        });
    }
    group.finish();
}

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("engine");
    for k in [4usize, 8, 12] {
        let files = 2 * k;
        let memory = Memory::ratio(3 * files as u64, 2 * k as u64);
        let placement = place(k, files, &memory).unwrap();
        let demands = worst_case_demands(k, files, 1);
        group.bench_with_input(BenchmarkId::new("deliver", k), &k, |b, _| {
            b.iter(|| deliver(black_box(&placement), black_box(&demands)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, multi_user, single_user, engine);
criterion_main!(benches);
