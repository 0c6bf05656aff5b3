use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ldp_core::estimator::{density_proxy, rl_diagnostic};
use ldp_core::geometry::{BoxMixture, BoxRegion};
use ldp_core::kernels::Iid;
use ldp_core::mc::{rng_for, Execution, MonteCarlo};
use ldp_core::measures::{lp_distance_flow, lp_distance_subsets, EmpiricalMeasure};
use ldp_core::trajectory::sweep::{run_suite, Suite};
use rand::Rng;
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn surface(c: &mut Criterion) {
    let model = Iid { law: BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)) };
    let mu = density_proxy(&BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)), 16).unwrap();
    let mut g = c.benchmark_group("rate_surface");
    g.sample_size(10);
    for (name, execution) in MODES {
        let mc = MonteCarlo { samples: 8192, seed: 1, execution };
        g.bench_function(name, |b| {
            b.iter(|| rl_diagnostic(&model, &mu, &[0.1, 0.2], &[10, 20], black_box(&mc)).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let mut g = c.benchmark_group("coupling_sweep");
    g.sample_size(10);
    for (name, execution) in MODES {
        g.bench_function(name, |b| b.iter(|| run_suite(Suite::Coupling, black_box(500), 1, execution).unwrap()));
    }
    g.finish();
}

fn lp_routes(c: &mut Criterion) {
    let mut g = c.benchmark_group("lp_distance");
    for atoms in [3usize, 6] {
        let mut rng = rng_for(4, 0, atoms as u64);
        let mut m = || {
            let pts = (0..atoms).map(|_| rng.random_range(0.0..2.0)).collect();
            let w = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
            EmpiricalMeasure::normalized(1, pts, w).unwrap()
        };
        let (mu, nu) = (m(), m());
        g.bench_with_input(BenchmarkId::new("flow", atoms), &(&mu, &nu), |b, (x, y)| {
            b.iter(|| lp_distance_flow(x, y).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("subsets", atoms), &(&mu, &nu), |b, (x, y)| {
            b.iter(|| lp_distance_subsets(x, y).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, surface, sweep, lp_routes);
criterion_main!(benches);
