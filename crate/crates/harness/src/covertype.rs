//! Bayesian logistic regression on Covertype with held-out accuracy traces.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use svgd_core::engines::{run, MetricPlan, RunConfig, RunOptions, RunRecord};
use svgd_core::targets::{
    bayes_logreg_target, load_covertype, predictive_accuracy, sample_logreg_prior, CovertypeOptions, Dataset,
    LogregOptions, COVERTYPE_ROWS,
};
use svgd_core::{Exec, Particles};

use crate::config::{CovertypeSpec, ExperimentConfig, TargetSpec};
use crate::error::{HarnessError, Result};
use crate::experiment::{repetition_seed, stream_rng, EnvironmentStamp};
use crate::output::{
    ensure_dir, metric_steps, record_json_name, write_aggregate, write_csv, write_json, write_plot_script, Column,
};

/// Held-out accuracy of the particle ensemble at one metric step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyPoint {
    pub step: usize,
    pub accuracy: f64,
    pub walltime_secs: f64,
}

#[derive(Debug, Clone)]
pub struct CovertypeRun {
    pub trace: Vec<AccuracyPoint>,
    pub record: RunRecord,
}

pub fn covertype_spec(config: &ExperimentConfig) -> Result<&CovertypeSpec> {
    match &config.target {
        TargetSpec::Covertype(c) => Ok(c),
        _ => Err(HarnessError::Config("`target`: the covertype command needs `kind: covertype`".into())),
    }
}

/// Loads the dataset named by the config, split and standardized under the
/// base seed so every repetition shares one train/test split.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Arc<Dataset>> {
    let spec = covertype_spec(config)?;
    let options = CovertypeOptions {
        seed: config.run.seed,
        train_fraction: spec.train_fraction,
        expected_rows: spec.check_row_count.then_some(COVERTYPE_ROWS),
    };
    Ok(Arc::new(load_covertype(&spec.data, &options)?))
}

/// One repetition on `data`. Particles start from prior draws; accuracy on
/// the test rows is recorded at every metric step.
pub fn run_covertype_repetition(
    config: &ExperimentConfig,
    data: &Arc<Dataset>,
    rep: usize,
    exec: Exec,
) -> Result<CovertypeRun> {
    let spec = covertype_spec(config)?;
    let seed = repetition_seed(config.run.seed, rep);
    let run_config = RunConfig { seed, ..config.run.clone() };
    let options = LogregOptions {
        subsample: (!spec.full_data).then_some(spec.subsample),
        per_step_batch: spec.per_step_batch,
        seed,
    };
    let target = bayes_logreg_target(Arc::clone(data), spec.prior, &options)?;
    let init = sample_logreg_prior(data.cols(), spec.prior, run_config.ensemble_size(), &mut stream_rng(seed, 0))?;

    let started = Instant::now();
    let mut trace = Vec::new();
    let mut observe = |step: usize, particles: &Particles| {
        trace.push(AccuracyPoint {
            step,
            accuracy: predictive_accuracy(particles, data, &data.test),
            walltime_secs: started.elapsed().as_secs_f64(),
        });
    };
    let metrics = MetricPlan { cadence: config.metrics.cadence, ksd: config.metrics.ksd_plan(), mmd: None };
    let run_options = RunOptions {
        exec,
        metrics: Some(metrics),
        init: Some(init),
        record_g_norm: false,
        observer: Some(&mut observe),
        ..Default::default()
    };
    let out = run(&run_config, &target, &config.kernel, run_options)?;
    Ok(CovertypeRun { trace, record: out.record })
}

pub fn trace_csv_name(rep: usize) -> String {
    format!("accuracy_{rep:03}.csv")
}

/// Runs every repetition on `data` and writes `accuracy_XXX.csv`
/// (`step,accuracy,walltime`), `record_XXX.json`, `aggregate.csv`,
/// `environment.json`, `config.json` and `plot.py` into `dir`.
pub fn run_covertype_on(
    config: &ExperimentConfig,
    data: Arc<Dataset>,
    dir: &Path,
    exec: Exec,
) -> Result<Vec<CovertypeRun>> {
    ensure_dir(dir)?;
    let mut runs = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let r = run_covertype_repetition(config, &data, rep, exec)?;
        write_csv(
            &dir.join(trace_csv_name(rep)),
            &["step", "accuracy", "walltime"],
            r.trace.iter().map(|p| [p.step.to_string(), p.accuracy.to_string(), p.walltime_secs.to_string()]),
        )?;
        write_json(&dir.join(record_json_name(rep)), &r.record)?;
        runs.push(r);
    }
    let steps = metric_steps(config.run.t, config.metrics.cadence);
    let accuracy = |r: &CovertypeRun, s: usize| r.trace.iter().find(|p| p.step == s).map(|p| p.accuracy);
    let columns: [Column<CovertypeRun>; 1] = [("accuracy", &accuracy)];
    write_aggregate(&dir.join("aggregate.csv"), &steps, &runs, &columns)?;
    write_json(
        &dir.join("environment.json"),
        &EnvironmentStamp::new(&config.name, config.run.seed, config.repetitions, exec),
    )?;
    write_json(&dir.join("config.json"), config)?;
    write_plot_script(dir, "aggregate.csv", &config.name, false)?;
    Ok(runs)
}

pub fn run_covertype(config: &ExperimentConfig, dir: &Path, exec: Exec) -> Result<Vec<CovertypeRun>> {
    config.validate()?;
    let data = load_dataset(config)?;
    run_covertype_on(config, data, dir, exec)
}
