//! Repeated runs of one configuration, and step-size sweeps over a grid.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use svgd_core::discrepancy::MmdReference;
use svgd_core::engines::{run, MetricPlan, RunOptions, RunRecord, ScheduleKind};
use svgd_core::targets::sample_logreg_prior;
use svgd_core::Exec;

use crate::config::{ExperimentConfig, TargetSpec};
use crate::error::{HarnessError, Result};
use crate::output::{
    ensure_dir, mean_ci, record_json_name, run_csv_name, write_csv, write_json, write_particles, write_plot_script,
    write_record_aggregate,
};

/// RNG stream (of the repetition seed) for the MMD reference sample.
const REFERENCE_STREAM: u64 = 3;
/// RNG stream for prior draws used as initial particles.
const PRIOR_INIT_STREAM: u64 = 0;

/// Seed of repetition `rep`.
pub fn repetition_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvironmentStamp {
    pub name: String,
    pub version: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub exec: String,
    pub threads: usize,
}

impl EnvironmentStamp {
    pub fn new(name: &str, base_seed: u64, repetitions: usize, exec: Exec) -> Self {
        Self {
            name: name.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            base_seed,
            seeds: (0..repetitions).map(|r| repetition_seed(base_seed, r)).collect(),
            exec: exec.label().to_string(),
            threads: thread_count(exec),
        }
    }
}

fn thread_count(exec: Exec) -> usize {
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return rayon::current_num_threads();
    }
    let _ = exec;
    1
}

/// Records of every repetition and where they were written.
#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
    pub stamp: EnvironmentStamp,
}

/// Runs repetition `rep` of `config`, returning its outputs and record.
pub fn run_repetition(config: &ExperimentConfig, rep: usize, exec: Exec) -> Result<(svgd_core::Particles, RunRecord)> {
    let seed = repetition_seed(config.run.seed, rep);
    let run_config = svgd_core::engines::RunConfig { seed, ..config.run.clone() };
    let built = config.target.build(seed)?;
    let mmd = match &config.metrics.mmd {
        Some(spec) => {
            let reference = config.target.sample(spec.reference_size, &mut stream_rng(seed, REFERENCE_STREAM))?;
            Some(MmdReference::new(reference, spec.kernel.unwrap_or(config.kernel), spec.estimator, exec)?)
        }
        None => None,
    };
    let metrics = MetricPlan { cadence: config.metrics.cadence, ksd: config.metrics.ksd_plan(), mmd };
    let init = match (&config.target, &built.dataset) {
        (TargetSpec::Covertype(c), Some(data)) => Some(sample_logreg_prior(
            data.cols(),
            c.prior,
            run_config.ensemble_size(),
            &mut stream_rng(seed, PRIOR_INIT_STREAM),
        )?),
        _ => None,
    };
    let options = RunOptions { exec, metrics: Some(metrics), init, ..Default::default() };
    let out = run(&run_config, &built.model, &config.kernel, options)?;
    Ok((out.outputs.positions, out.record))
}

/// Runs all repetitions sequentially and writes `run_XXX.csv`,
/// `record_XXX.json`, `particles/rep_XXX.csv`, `aggregate.csv`,
/// `environment.json`, `config.json` and `plot.py` into `dir`.
pub fn run_experiment(config: &ExperimentConfig, dir: &Path, exec: Exec) -> Result<ResultBundle> {
    config.validate()?;
    ensure_dir(dir)?;
    let particles_dir = dir.join("particles");
    ensure_dir(&particles_dir)?;
    let mut records = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let (outputs, record) = run_repetition(config, rep, exec)?;
        write_run_csv_and_record(dir, rep, &record)?;
        write_particles(&particles_dir.join(format!("rep_{rep:03}.csv")), &outputs)?;
        records.push(record);
    }
    write_record_aggregate(&dir.join("aggregate.csv"), &records, config.metrics.cadence)?;
    let stamp = EnvironmentStamp::new(&config.name, config.run.seed, config.repetitions, exec);
    write_json(&dir.join("environment.json"), &stamp)?;
    write_json(&dir.join("config.json"), config)?;
    write_plot_script(dir, "aggregate.csv", &config.name, false)?;
    Ok(ResultBundle { dir: dir.to_path_buf(), records, stamp })
}

fn write_run_csv_and_record(dir: &Path, rep: usize, record: &RunRecord) -> Result<()> {
    crate::output::write_run_csv(&dir.join(run_csv_name(rep)), record)?;
    write_json(&dir.join(record_json_name(rep)), record)
}

/// Outcome of one step size in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub gamma: f64,
    /// Mean and 95% half-width of the final-step metric; `None` if any
    /// repetition diverged.
    pub final_mean: Option<f64>,
    pub final_ci95: Option<f64>,
    pub diverged: bool,
}

/// Runs the experiment once per step size in the config's sweep grid (or the
/// default grid) with a constant schedule, each into `dir/gamma_XX`, and
/// summarizes the final-step metric (MMD² if configured, else KSD²) in
/// `sweep.csv`. Diverging step sizes are recorded rather than aborting.
pub fn run_sweep(config: &ExperimentConfig, dir: &Path, exec: Exec) -> Result<Vec<SweepPoint>> {
    config.validate()?;
    let use_mmd = config.metrics.mmd.is_some();
    if !use_mmd && config.metrics.ksd.is_none() {
        return Err(HarnessError::Config("`metrics`: a sweep needs `mmd` or `ksd` to rank step sizes".into()));
    }
    let gammas = config.sweep.as_ref().map(|s| s.gammas.clone()).unwrap_or_else(crate::config::default_gamma_grid);
    ensure_dir(dir)?;
    let mut points = Vec::with_capacity(gammas.len());
    for (i, &gamma) in gammas.iter().enumerate() {
        let mut cfg = config.clone();
        cfg.run.schedule = ScheduleKind::Constant { gamma };
        cfg.sweep = None;
        match run_experiment(&cfg, &dir.join(format!("gamma_{i:02}")), exec) {
            Ok(bundle) => {
                let finals: Vec<f64> = bundle
                    .records
                    .iter()
                    .filter_map(|r| {
                        let last = r.steps.last()?;
                        if use_mmd {
                            last.mmd2
                        } else {
                            last.ksd2
                        }
                    })
                    .collect();
                let m = mean_ci(&finals);
                points.push(SweepPoint {
                    gamma,
                    final_mean: m.map(|m| m.mean),
                    final_ci95: m.and_then(|m| m.ci95),
                    diverged: false,
                });
            }
            Err(HarnessError::Divergence(_)) => {
                points.push(SweepPoint { gamma, final_mean: None, final_ci95: None, diverged: true });
            }
            Err(e) => return Err(e),
        }
    }
    let metric = if use_mmd { "final_mmd2" } else { "final_ksd2" };
    let header = ["gamma", &format!("{metric}_mean"), &format!("{metric}_ci95"), "diverged"];
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    write_csv(
        &dir.join("sweep.csv"),
        &header,
        points.iter().map(|p| [p.gamma.to_string(), opt(p.final_mean), opt(p.final_ci95), p.diverged.to_string()]),
    )?;
    write_plot_script(dir, "sweep.csv", &format!("{} step-size sweep", config.name), true)?;
    Ok(points)
}

/// The sweep point with the smallest final metric.
pub fn best_gamma(points: &[SweepPoint]) -> Option<&SweepPoint> {
    points
        .iter()
        .filter(|p| p.final_mean.is_some())
        .min_by(|a, b| a.final_mean.partial_cmp(&b.final_mean).expect("finite metrics"))
}
