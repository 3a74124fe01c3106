use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;
use svgd_core::discrepancy::{ksd2_to_target_exec, Estimator};
use svgd_core::engines::{run, svgd_step, Algorithm, OutputTime, RunConfig, RunOptions, Sampling, ScheduleKind};
use svgd_core::targets::{gaussian_target, sample_uniform_ball};
use svgd_core::{Exec, KernelSpec, ParticleEnsemble};

const PATHS: [Exec; 2] = [Exec::Sequential, Exec::Parallel];

fn svgd_steps(c: &mut Criterion) {
    let d = 5;
    let target = gaussian_target(vec![0.0; d], vec![1.0; d]).unwrap();
    let kernel = KernelSpec::rbf(1.0);
    let mut group = c.benchmark_group("svgd_step");
    for n in [100, 400] {
        let p = sample_uniform_ball(d, 1.0, n, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let ensemble = ParticleEnsemble::all_real(p);
        for exec in PATHS {
            group.bench_with_input(BenchmarkId::new(exec.label(), n), &ensemble, |b, e| {
                b.iter(|| svgd_step(black_box(e), &target, &kernel, 0.1, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn gb_runs(c: &mut Criterion) {
    let d = 5;
    let target = gaussian_target(vec![0.0; d], vec![1.0; d]).unwrap();
    let kernel = KernelSpec::laplace(1.0);
    let config = RunConfig {
        algorithm: Algorithm::Gb,
        n: 100,
        k: 10,
        t: 50,
        schedule: ScheduleKind::Constant { gamma: 0.05 },
        sampling: Sampling::WithoutReplacement,
        output_time: OutputTime::Final,
        seed: 1,
    };
    let mut group = c.benchmark_group("gb_run");
    for exec in PATHS {
        group.bench_function(exec.label(), |b| {
            b.iter(|| {
                run(&config, &target, &kernel, RunOptions { exec, record_g_norm: false, ..Default::default() }).unwrap()
            })
        });
    }
    group.finish();
}

fn ksd(c: &mut Criterion) {
    let d = 5;
    let target = gaussian_target(vec![0.0; d], vec![1.0; d]).unwrap();
    let kernel = KernelSpec::rbf(1.0);
    let p = sample_uniform_ball(d, 2.0, 1000, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    let mut group = c.benchmark_group("ksd2_ustat_1000");
    for exec in PATHS {
        group.bench_function(exec.label(), |b| {
            b.iter(|| ksd2_to_target_exec(black_box(&p), &target, &kernel, Estimator::Ustat, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, svgd_steps, gb_runs, ksd);
criterion_main!(benches);
