use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dynest_core::dynamics::{generate_trajectory, SamplerConfig};
use dynest_core::estimators::{density_estimate_with, map_estimate, Grid, Strategy};
use dynest_core::{Domain, Kernel, NoiseLaw, RngState, SystemSpec, Trajectory};

fn orbit(system: &str, n: usize) -> (dynest_core::DynamicalSystem, Trajectory) {
    let sys = system.parse::<SystemSpec>().unwrap().build().unwrap();
    let noise = NoiseLaw::none(sys.dimension());
    let traj = generate_trajectory(&sys, n, &noise, &RngState::from_seed(1), &SamplerConfig::default()).unwrap();
    (sys, traj)
}

fn density_strategies(c: &mut Criterion) {
    let (_, traj) = orbit("beta:27/11", 50_000);
    let kernel = Kernel::epanechnikov();
    let grid = Grid::cell_centered(&Domain::unit_cube(1), 200).unwrap();
    let mut group = c.benchmark_group("density_1d");
    group.sample_size(10);
    for (name, strategy) in [("direct", Strategy::Direct), ("indexed", Strategy::Indexed)] {
        group.bench_with_input(BenchmarkId::new(name, 50_000), &strategy, |b, &s| {
            b.iter(|| density_estimate_with(black_box(&traj), &kernel, 0.007, &grid, s).unwrap())
        });
    }
    group.finish();
}

fn trajectories(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory");
    group.sample_size(10);
    for system in ["beta:27/11", "beta:2", "gauss", "logistic:3.8"] {
        let sys = system.parse::<SystemSpec>().unwrap().build().unwrap();
        let noise = NoiseLaw::none(1);
        group.bench_function(system, |b| {
            b.iter(|| {
                generate_trajectory(&sys, 50_000, &noise, &RngState::from_seed(2), &SamplerConfig::default()).unwrap()
            })
        });
    }
    group.finish();
}

fn plane_map(c: &mut Criterion) {
    let (sys, traj) = orbit("matrixbeta:paper", 66_668);
    let kernel = Kernel::box_kernel(2).unwrap();
    let grid = Grid::cell_centered(&sys.domain, 100).unwrap();
    let mut group = c.benchmark_group("map_2d");
    group.sample_size(10);
    group.bench_function("indexed", |b| {
        b.iter(|| map_estimate(black_box(&traj), &kernel, 0.004, &grid).unwrap())
    });
    group.finish();
}

criterion_group!(benches, density_strategies, trajectories, plane_map);
criterion_main!(benches);
