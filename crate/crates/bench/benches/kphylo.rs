use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kphylo::sampler::{sample_rng, sample_uniform};
use kphylo::seriesoracle::{oracle_m, solve_t};
use kphylo::{enumerate_all, CountTable};
use std::hint::black_box;

fn count_table(c: &mut Criterion) {
    let mut g = c.benchmark_group("count_table");
    g.sample_size(10);
    for n in [101, 301] {
        g.bench_with_input(BenchmarkId::new("k2_rank2", n), &n, |b, &n| {
            b.iter(|| CountTable::with_max_rank(2, n, 2).unwrap())
        });
    }
    g.bench_function("k3_all_ranks_201", |b| b.iter(|| CountTable::new(3, 201).unwrap()));
    g.finish();
}

fn sampler(c: &mut Criterion) {
    let mut g = c.benchmark_group("sample_uniform");
    for (k, n) in [(2, 1001), (3, 1001)] {
        let table = CountTable::trees_only(k, n).unwrap();
        let mut j = 0;
        g.bench_function(BenchmarkId::new(format!("k{k}"), n), |b| {
            b.iter(|| {
                j += 1;
                sample_uniform(&table, n, &mut sample_rng(1, j)).unwrap()
            })
        });
    }
    g.finish();
}

fn series(c: &mut Criterion) {
    let mut g = c.benchmark_group("series");
    g.sample_size(10);
    g.bench_function("solve_t_k3_64", |b| b.iter(|| solve_t(3, black_box(64)).unwrap()));
    g.bench_function("oracle_m_k2_i2_64", |b| {
        b.iter(|| oracle_m(2, 2, black_box(64)).unwrap())
    });
    g.finish();
}

fn enumeration(c: &mut Criterion) {
    c.bench_function("enumerate_k2_n7", |b| {
        b.iter(|| enumerate_all(2, black_box(7)).unwrap().count())
    });
}

criterion_group!(benches, count_table, sampler, series, enumeration);
criterion_main!(benches);
