//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use svgd_core::discrepancy::{ksd2_to_target_exec, mmd2_exec, Estimator};
use svgd_core::targets::gaussian_target;
use svgd_core::verification::coupling_check;
use svgd_core::{Exec, KernelFamily, KernelSpec};

use crate::audit::{format_table, run_suite, Suite};
use crate::config::{ExperimentConfig, TargetSpec};
use crate::covertype::run_covertype;
use crate::error::{HarnessError, Result};
use crate::experiment::{best_gamma, run_experiment, run_sweep};
use crate::output::{ensure_dir, read_particles, write_json};

#[derive(Debug, Parser)]
#[command(name = "svgd", version, about = "SVGD, VP-SVGD and GB-SVGD experiments and audits")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the config's `run.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the data-parallel loops (1 runs sequentially).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the configured experiment for all repetitions.
    Run,
    /// Run the experiment over a grid of constant step sizes.
    Sweep,
    /// Bayesian logistic regression on Covertype with accuracy traces.
    Covertype,
    /// Run a verification suite: kernels, coupling, unbiasedness, counts, bounds or all.
    Audit { suite: String },
    /// Check the VP/GB coupling on a standard Gaussian target.
    Couple(CoupleArgs),
    /// KSD² of a particle file to the config's target (standard Gaussian by default).
    Ksd(KsdArgs),
    /// MMD² between two particle files.
    Mmd(MmdArgs),
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub t: usize,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, default_value = "rbf")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
}

#[derive(Debug, Args)]
pub struct KsdArgs {
    /// Headerless CSV, one particle per line.
    #[arg(long)]
    pub particles: PathBuf,
    #[arg(long, default_value = "rbf")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    /// vstat or ustat.
    #[arg(long, default_value = "vstat")]
    pub estimator: String,
}

#[derive(Debug, Args)]
pub struct MmdArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "laplace")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth: f64,
    #[arg(long, default_value = "vstat")]
    pub estimator: String,
}

fn kernel_arg(family: &str, bandwidth: f64) -> Result<KernelSpec> {
    let family: KernelFamily = family.parse().map_err(|e: svgd_core::SvgdError| HarnessError::Config(e.to_string()))?;
    Ok(KernelSpec::new(family, bandwidth)?)
}

fn estimator_arg(s: &str) -> Result<Estimator> {
    match s {
        "vstat" => Ok(Estimator::Vstat),
        "ustat" => Ok(Estimator::Ustat),
        other => Err(HarnessError::Config(format!("unknown estimator `{other}`; expected vstat or ustat"))),
    }
}

fn install_threads(threads: Option<usize>) -> Result<Exec> {
    match threads {
        Some(0) => Err(HarnessError::Config("`--threads` must be at least 1".into())),
        Some(1) => Ok(Exec::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            // A second global pool cannot be installed; the first one wins.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(Exec::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Exec::Sequential),
        None => Ok(Exec::default()),
    }
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let path =
        common.config.as_ref().ok_or_else(|| HarnessError::Config("this command needs `--config <path>`".into()))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = common.seed {
        config.run.seed = seed;
    }
    Ok(config)
}

fn output_dir(common: &Common, config: &ExperimentConfig) -> PathBuf {
    common.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| Path::new("results").join(&config.name))
}

pub fn execute(cli: Cli) -> Result<()> {
    let exec = install_threads(cli.common.threads)?;
    let common = &cli.common;
    match cli.command {
        Command::Run => {
            let config = load_config(common)?;
            let dir = output_dir(common, &config);
            let bundle = run_experiment(&config, &dir, exec)?;
            println!("{} repetitions of `{}` written to {}", bundle.records.len(), config.name, dir.display());
        }
        Command::Sweep => {
            let config = load_config(common)?;
            let dir = output_dir(common, &config);
            let points = run_sweep(&config, &dir, exec)?;
            for p in &points {
                match p.final_mean {
                    Some(m) => println!("gamma {:<10.3e} final metric {m:.6e}", p.gamma),
                    None => println!("gamma {:<10.3e} diverged", p.gamma),
                }
            }
            if let Some(best) = best_gamma(&points) {
                println!("best gamma {:e}", best.gamma);
            }
        }
        Command::Covertype => {
            let config = load_config(common)?;
            let dir = output_dir(common, &config);
            let runs = run_covertype(&config, &dir, exec)?;
            for (rep, r) in runs.iter().enumerate() {
                if let Some(last) = r.trace.last() {
                    println!("rep {rep}: step {} accuracy {:.4}", last.step, last.accuracy);
                }
            }
        }
        Command::Audit { suite } => {
            let suite: Suite = suite.parse()?;
            let rows = run_suite(suite, common.seed.unwrap_or(17), exec)?;
            print!("{}", format_table(&rows));
            if let Some(dir) = &common.out {
                ensure_dir(dir)?;
                write_json(&dir.join(format!("audit_{}.json", suite.name())), &rows)?;
            }
            let failed = rows.iter().filter(|r| !r.pass).count();
            if failed > 0 {
                return Err(HarnessError::Audit(format!("{failed} of {} checks failed", rows.len())));
            }
        }
        Command::Couple(args) => {
            let kernel = kernel_arg(&args.kernel, args.bandwidth)?;
            let target = gaussian_target(vec![0.0; args.dim], vec![1.0; args.dim])?;
            let coupling_exec = if common.threads.is_some() { exec } else { Exec::Sequential };
            let seed = common.seed.unwrap_or(0);
            let report = coupling_check(args.n, args.k, args.t, &target, &kernel, args.gamma, seed, coupling_exec)?;
            println!(
                "coupling n={} K={} T={}: {} matched, max deviation {:e}, {} reduction: {}",
                report.n,
                report.k,
                report.t,
                report.matched_count,
                report.max_abs_deviation,
                report.exec,
                if report.pass { "pass" } else { "FAIL" }
            );
            if let Some(dir) = &common.out {
                ensure_dir(dir)?;
                write_json(&dir.join("coupling.json"), &report)?;
            }
            if !report.pass {
                return Err(HarnessError::Audit(format!(
                    "coupling mismatch: {} of {} matched, max deviation {:e}",
                    report.matched_count,
                    args.n - args.k * args.t,
                    report.max_abs_deviation
                )));
            }
        }
        Command::Ksd(args) => {
            let particles = read_particles(&args.particles)?;
            let kernel = kernel_arg(&args.kernel, args.bandwidth)?;
            let estimator = estimator_arg(&args.estimator)?;
            let target = match &common.config {
                Some(_) => load_config(common)?.target,
                None => TargetSpec::Gaussian { dim: particles.dim(), mean: None, variance: None },
            };
            let model = target.build(common.seed.unwrap_or(0))?.model;
            let report = ksd2_to_target_exec(&particles, &model, &kernel, estimator, exec)?;
            print_report(common, "ksd.json", &report)?;
        }
        Command::Mmd(args) => {
            let a = read_particles(&args.a)?;
            let b = read_particles(&args.b)?;
            let kernel = kernel_arg(&args.kernel, args.bandwidth)?;
            let report = mmd2_exec(&a, &b, &kernel, estimator_arg(&args.estimator)?, exec)?;
            print_report(common, "mmd.json", &report)?;
        }
    }
    Ok(())
}

fn print_report<T: serde::Serialize>(common: &Common, name: &str, report: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(report)?);
    if let Some(dir) = &common.out {
        ensure_dir(dir)?;
        write_json(&dir.join(name), report)?;
    }
    Ok(())
}
