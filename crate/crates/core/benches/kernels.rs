use choquard::{Execution, Landscape, Potential, ProblemParams, RadialGrid, RieszOperator};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn grid(n: usize) -> RadialGrid {
    RadialGrid::new(ProblemParams::new(3, 1.0).unwrap(), 40.0, n, 1.5).unwrap()
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_assembly");
    group.sample_size(10);
    for n in [128, 256] {
        let g = grid(n);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &g, |b, g| {
                b.iter(|| RieszOperator::build_with(black_box(g), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("riesz_apply");
    for n in [256, 1024] {
        let g = grid(n);
        let op = RieszOperator::build(&g).unwrap();
        let f = g.sample(|r| (1.0 + r * r).powi(-2));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &f, |b, f| {
                b.iter(|| op.apply_with(black_box(f), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn gradients(c: &mut Criterion) {
    let mut group = c.benchmark_group("grad_d");
    let g = grid(1024);
    let op = RieszOperator::build(&g).unwrap();
    let u = g.sample(|r| (1.0 + r * r).powf(-1.5));
    for (name, exec) in MODES {
        let land = Landscape::new(&g, &op, &Potential::Model { mu: 1.0 })
            .unwrap()
            .with_execution(exec);
        group.bench_function(name, |b| b.iter(|| land.grad_d(black_box(&u)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, assembly, apply, gradients);
criterion_main!(benches);
