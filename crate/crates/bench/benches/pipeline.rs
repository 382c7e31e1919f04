use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tbr_bench::{caterpillars, pairs};
use tbr_core::{
    build_model, dmp_lower_bound, kernelize, parse_newick, solve_model, tbr_distance, write_newick, BoundBudget,
    ConvexCharacterSampler, Ruleset, SolveOptions,
};

fn newick(c: &mut Criterion) {
    let text: Vec<String> = pairs(200, 0, 4).iter().map(|(a, _)| write_newick(a)).collect();
    c.bench_function("newick/parse_200", |b| b.iter(|| text.iter().map(|s| parse_newick(black_box(s)).unwrap().num_taxa()).sum::<usize>()));
}

fn kernel(c: &mut Criterion) {
    let mut g = c.benchmark_group("kernelize");
    for t in [20, 40, 60] {
        let ps = pairs(t, 5, 3);
        g.bench_with_input(BenchmarkId::new("all", t), &ps, |b, ps| {
            b.iter(|| ps.iter().map(|(x, y)| kernelize(x, y, Ruleset::AllSeven).unwrap().num_taxa()).sum::<usize>())
        });
    }
    g.finish();
}

fn model(c: &mut Criterion) {
    let mut g = c.benchmark_group("model");
    for t in [20, 40] {
        let ps = pairs(t, 6, 3);
        g.bench_with_input(BenchmarkId::new("build", t), &ps, |b, ps| {
            b.iter(|| ps.iter().map(|(x, y)| build_model(x, y, true).unwrap().num_constraints()).sum::<usize>())
        });
        let models: Vec<_> = ps.iter().map(|(x, y)| build_model(x, y, false).unwrap()).collect();
        g.bench_with_input(BenchmarkId::new("solve", t), &models, |b, ms| {
            b.iter(|| ms.iter().map(|m| solve_model(m).unwrap().distance).sum::<usize>())
        });
    }
    g.finish();
}

fn bounds(c: &mut Criterion) {
    let mut g = c.benchmark_group("bounds");
    let (x, y) = pairs(40, 5, 1).remove(0);
    let sampler = ConvexCharacterSampler::new(&x, 2).unwrap();
    g.bench_function("sample_40", |b| {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        b.iter(|| sampler.sample(&mut rng))
    });
    g.bench_function("dmp_40_x200", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            dmp_lower_bound(&x, &y, &BoundBudget::samples(200), &mut rng).unwrap().value
        })
    });
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let mut g = c.benchmark_group("tbr_distance");
    g.sample_size(10);
    let (x, y) = caterpillars(12);
    g.bench_function("caterpillar_12", |b| b.iter(|| tbr_distance(&x, &y, &SolveOptions::default()).unwrap().distance));
    for k in [3, 8] {
        let ps = pairs(40, k, 2);
        g.bench_with_input(BenchmarkId::new("t40", k), &ps, |b, ps| {
            b.iter(|| ps.iter().map(|(x, y)| tbr_distance(x, y, &SolveOptions::default()).unwrap().distance).sum::<usize>())
        });
    }
    g.finish();
}

criterion_group!(benches, newick, kernel, model, bounds, pipeline);
criterion_main!(benches);
