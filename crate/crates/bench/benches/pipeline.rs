use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use paramode::{
    evolve, evolve_grid, project, reduce, run_sweep, shell_distribution, spectrum_grid, sweep::AxisSpec,
    CouplingMatrices, DriveSpec, GridSpec, IntegratorConfig, SweepConfig, Truncation,
};

fn evolution(c: &mut Criterion) {
    let drive = DriveSpec::new(0.0, 0.05, 0.0, 100).unwrap();
    let [plus, _] = drive.modes();
    let mut group = c.benchmark_group("evolve_100_cycles");
    for (name, cfg) in [
        ("rk4", IntegratorConfig::fixed(4096)),
        ("rk45", IntegratorConfig::default()),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| evolve(black_box(&plus), &drive.timing(), &cfg).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let drive = DriveSpec::new(0.0, 0.05, 0.0, 200).unwrap();
    let cfg = IntegratorConfig::default();
    let modes = drive.modes();
    let states = modes.map(|m| evolve(&m, &drive.timing(), &cfg).unwrap());
    c.bench_function("grid_and_shells_n128", |b| {
        b.iter(|| {
            let t = Truncation::Fixed { n_max: 128 };
            let p = project(&states[0], &modes[0], t).unwrap();
            let m = project(&states[1], &modes[1], t).unwrap();
            shell_distribution(&spectrum_grid(&p, &m).unwrap())
        })
    });
}

fn sweep(c: &mut Criterion) {
    let mut cfg = SweepConfig::point(DriveSpec::new(0.0, 0.02, 0.0, 50).unwrap())
        .with_sweep(AxisSpec::detuning(-0.06, 0.06, 32));
    cfg.integrator = IntegratorConfig::fixed(1024);
    let mut group = c.benchmark_group("sweep_32_points");
    group.sample_size(10);
    for threads in [1, 0] {
        group.bench_function(format!("threads_{threads}"), |b| b.iter(|| run_sweep(&cfg, threads).unwrap()));
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let n = 16;
    let m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if (i + 1) % n == j || (j + 1) % n == i { 1.0 } else { 0.0 }).collect())
        .collect();
    let cm = CouplingMatrices {
        k0: m.iter().enumerate().map(|(i, r)| r.iter().enumerate().map(|(j, v)| 0.1 * v + f64::from(u8::from(i == j))).collect()).collect(),
        k1: m.iter().map(|r| r.iter().map(|v| 0.01 * v).collect()).collect(),
    };
    c.bench_function("reduce_ring_16", |b| b.iter(|| reduce(black_box(&cm), 1e-10).unwrap()));
}

fn grid(c: &mut Criterion) {
    let drive = DriveSpec::new(0.0, 0.05, 0.0, 2).unwrap();
    let [plus, _] = drive.modes();
    let spec = GridSpec::default();
    let mut group = c.benchmark_group("tdse");
    group.sample_size(10);
    group.bench_function("split_step_2_cycles", |b| b.iter(|| evolve_grid(&plus, &drive.timing(), &spec).unwrap()));
    group.finish();
}

criterion_group!(benches, evolution, spectrum, sweep, reduction, grid);
criterion_main!(benches);
