//! Verification suites run by `svgd audit <suite>`.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use svgd_core::engines::{run, Algorithm, OutputTime, RunConfig, RunOptions, Sampling, ScheduleKind};
use svgd_core::kernels::{audit_kernel_assumptions, CheckStatus, ProbeRegion};
use svgd_core::targets::gaussian_target;
use svgd_core::verification::{
    coupling_check, g_norm_bound_audit, oracle_count_audit, per_step_bound_audit, unbiasedness_mc, uniform_ball_init,
    UnbiasednessSetup, DEFAULT_PLUGIN_SAMPLES, MIN_TRIALS,
};
use svgd_core::{Exec, KernelFamily, KernelSpec, TargetModel};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Kernels,
    Coupling,
    Unbiasedness,
    Counts,
    Bounds,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [Suite::Kernels, Suite::Coupling, Suite::Unbiasedness, Suite::Counts, Suite::Bounds];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Coupling => "coupling",
            Suite::Unbiasedness => "unbiasedness",
            Suite::Counts => "counts",
            Suite::Bounds => "bounds",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH.into_iter().chain([Suite::All]).find(|x| x.name() == s).ok_or_else(|| {
            HarnessError::Config(format!(
                "unknown audit suite `{s}`; expected one of kernels, coupling, unbiasedness, counts, bounds, all"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub suite: String,
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

fn row(suite: Suite, check: impl Into<String>, pass: bool, detail: impl Into<String>) -> AuditRow {
    AuditRow { suite: suite.name().into(), check: check.into(), pass, detail: detail.into() }
}

fn std_normal(d: usize) -> Result<TargetModel> {
    Ok(gaussian_target(vec![0.0; d], vec![1.0; d])?)
}

pub fn run_suite(suite: Suite, seed: u64, exec: Exec) -> Result<Vec<AuditRow>> {
    match suite {
        Suite::Kernels => kernels(seed),
        Suite::Coupling => coupling(seed),
        Suite::Unbiasedness => unbiasedness(seed, exec),
        Suite::Counts => counts(seed),
        Suite::Bounds => bounds(seed),
        Suite::All => {
            let mut rows = Vec::new();
            for s in Suite::EACH {
                rows.extend(run_suite(s, seed, exec)?);
            }
            Ok(rows)
        }
    }
}

/// Assumption audits on a radius-3 ball in two dimensions plus central
/// finite-difference checks of `∇₂k` on 1000 random pairs per family.
pub fn kernels(seed: u64) -> Result<Vec<AuditRow>> {
    let mut rows = Vec::new();
    let region = ProbeRegion::Ball { center: vec![0.0; 2], radius: 3.0 };
    for family in KernelFamily::ALL {
        let spec = KernelSpec::new(family, 1.0)?;
        let audit = audit_kernel_assumptions(&spec, 2, &region, 10_000, seed);
        let flags = audit.checks.iter().filter(|c| c.status == CheckStatus::Flag).count();
        let failed: Vec<&str> =
            audit.checks.iter().filter(|c| c.status == CheckStatus::Fail).map(|c| c.name.as_str()).collect();
        let detail = if failed.is_empty() {
            format!("{} checks, {flags} flagged, B = {:.4}", audit.checks.len(), audit.constants.b)
        } else {
            format!("failed: {}", failed.join(", "))
        };
        rows.push(row(Suite::Kernels, format!("assumptions {}", family.name()), audit.passed(), detail));

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfd);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let g = spec.grad2(&x, &y)?.grad;
            for i in 0..3 {
                let eps = 1e-6;
                let (mut yp, mut ym) = (y.clone(), y.clone());
                yp[i] += eps;
                ym[i] -= eps;
                let fd = (spec.value(&x, &yp) - spec.value(&x, &ym)) / (2.0 * eps);
                worst = worst.max((g[i] - fd).abs() / g[i].abs().max(1e-3));
            }
        }
        rows.push(row(
            Suite::Kernels,
            format!("gradient fd {}", family.name()),
            worst < 1e-6,
            format!("max rel err {worst:.2e}"),
        ));
    }
    Ok(rows)
}

/// The coupling matrix `{(4,1,2), (10,2,3), (100,10,5)} × 5 seeds` in
/// dimensions 2 and 5, rbf with `h = 1`, sequential reduction.
pub fn coupling(seed: u64) -> Result<Vec<AuditRow>> {
    let kernel = KernelSpec::rbf(1.0);
    let mut rows = Vec::new();
    for d in [2, 5] {
        let target = std_normal(d)?;
        for (n, k, t) in [(4, 1, 2), (10, 2, 3), (100, 10, 5)] {
            let mut pass = true;
            let mut max_dev = 0.0f64;
            for s in 0..5 {
                let r = coupling_check(n, k, t, &target, &kernel, 0.1, seed.wrapping_add(s), Exec::Sequential)?;
                pass &= r.pass && r.matched_count == n - k * t;
                max_dev = max_dev.max(r.max_abs_deviation);
            }
            rows.push(row(
                Suite::Coupling,
                format!("d={d} n={n} K={k} T={t}"),
                pass,
                format!("5 seeds, {} matched each, max deviation {max_dev:e}", n - k * t),
            ));
        }
    }
    Ok(rows)
}

/// Unbiasedness at `K ∈ {1, 4, 16}` for the smooth kernels, and the drop in
/// trial variance from `K = 1` to `K = 16`.
pub fn unbiasedness(seed: u64, exec: Exec) -> Result<Vec<AuditRow>> {
    let target = std_normal(2)?;
    let init = uniform_ball_init(2, 1.0);
    let mut rows = Vec::new();
    for kernel in [KernelSpec::rbf(1.0), KernelSpec::imq(1.0), KernelSpec::matern32(1.0)] {
        let mut variances = Vec::new();
        for k in [1, 4, 16] {
            let setup = UnbiasednessSetup {
                k,
                probe_count: 5,
                trials: MIN_TRIALS,
                plugin_samples: DEFAULT_PLUGIN_SAMPLES,
                seed,
            };
            let r = unbiasedness_mc(&target, &kernel, &init, setup, exec)?;
            rows.push(row(
                Suite::Unbiasedness,
                format!("{} K={k}", kernel.family.name()),
                r.pass,
                format!("max |z| = {:.3} over 5 probes, {} trials", r.z_score.abs(), r.trials),
            ));
            variances.push(r.trial_variance);
        }
        let ratio = variances[2].iter().zip(&variances[0]).map(|(v16, v1)| v16 / v1).fold(0.0f64, f64::max);
        rows.push(row(
            Suite::Unbiasedness,
            format!("{} variance K=16 vs K=1", kernel.family.name()),
            ratio <= 0.35,
            format!("largest ratio {ratio:.4} (limit 0.35)"),
        ));
    }
    Ok(rows)
}

/// The 12-point `(n, K, T)` sweep of recorded oracle counts.
pub const COUNT_SWEEP: [(usize, usize, usize); 12] = [
    (1, 1, 0),
    (1, 1, 1),
    (4, 1, 2),
    (5, 5, 3),
    (10, 2, 3),
    (10, 3, 7),
    (16, 4, 4),
    (20, 1, 10),
    (25, 5, 6),
    (30, 7, 2),
    (50, 10, 5),
    (100, 10, 20),
];

pub fn counts(seed: u64) -> Result<Vec<AuditRow>> {
    let target = std_normal(2)?;
    let kernel = KernelSpec::rbf(1.0);
    let mut rows = Vec::new();
    for algorithm in [Algorithm::Vp, Algorithm::Gb, Algorithm::Svgd] {
        let mut failures = Vec::new();
        for (i, &(n, k, t)) in COUNT_SWEEP.iter().enumerate() {
            let config = RunConfig {
                algorithm,
                n,
                k,
                t,
                schedule: ScheduleKind::Constant { gamma: 0.05 },
                sampling: Sampling::WithoutReplacement,
                output_time: OutputTime::RandomS,
                seed: seed.wrapping_add(i as u64),
            };
            let out = run(&config, &target, &kernel, RunOptions { record_g_norm: false, ..Default::default() })?;
            let audit = oracle_count_audit(&out.record, &config);
            if !audit.pass {
                failures.push(format!(
                    "(n={n},K={k},T={t}): distinct {}/{} per-use {}/{}",
                    audit.recorded_distinct, audit.expected_distinct, audit.recorded_paper, audit.expected_paper
                ));
            }
        }
        let detail = if failures.is_empty() {
            format!("{} configurations exact", COUNT_SWEEP.len())
        } else {
            failures.join("; ")
        };
        rows.push(row(Suite::Counts, format!("{algorithm:?}").to_lowercase(), failures.is_empty(), detail));
    }
    Ok(rows)
}

/// Per-step potential bound and `‖g_t‖_H` surrogate bound on VP runs with
/// the standard Gaussian in two dimensions, rbf `h = 1`, `T = 200`, at half
/// the step-size cap `1/(2·A1·L)` and at the cap.
pub fn bounds(seed: u64) -> Result<Vec<AuditRow>> {
    let target = std_normal(2)?;
    let kernel = KernelSpec::rbf(1.0);
    let constants = kernel.analytic_constants(2).expect("rbf constants are analytic");
    let l = target.smoothness().l;
    let cap = 1.0 / (2.0 * constants.a1 * l);
    let mut rows = Vec::new();
    for (label, gamma) in [("half cap", 0.5 * cap), ("cap", cap)] {
        let config = RunConfig {
            algorithm: Algorithm::Vp,
            n: 20,
            k: 2,
            t: 200,
            schedule: ScheduleKind::Constant { gamma },
            sampling: Sampling::WithoutReplacement,
            output_time: OutputTime::Final,
            seed,
        };
        let out = run(&config, &target, &kernel, RunOptions { track_potential: true, ..Default::default() })?;
        let audit = per_step_bound_audit(&out.record, l, &constants)?;
        let detail = match &audit.first_violation {
            None => format!("{} particle steps, no violations", audit.checked),
            Some(v) => format!(
                "{} violations; first at step {} particle {}: {:.3e} > {:.3e}",
                audit.violations, v.step, v.particle, v.increase, v.bound
            ),
        };
        rows.push(row(Suite::Bounds, format!("potential step bound, gamma = {label}"), audit.pass, detail));
        let g = g_norm_bound_audit(&out.record, l, constants.b, 0.0)?;
        rows.push(row(
            Suite::Bounds,
            format!("g-norm surrogate bound, gamma = {label}"),
            g.pass,
            format!("{} steps, worst ratio {:.4}", g.checked, g.worst_ratio),
        ));
    }
    Ok(rows)
}

pub fn format_table(rows: &[AuditRow]) -> String {
    let w_suite = rows.iter().map(|r| r.suite.len()).max().unwrap_or(0).max(5);
    let w_check = rows.iter().map(|r| r.check.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w_suite$}  {:<w_check$}  {:<6}  detail", "suite", "check", "result");
    let _ = writeln!(out, "{}", "-".repeat(w_suite + w_check + 16));
    for r in rows {
        let status = if r.pass { "pass" } else { "FAIL" };
        let _ = writeln!(out, "{:<w_suite$}  {:<w_check$}  {:<6}  {}", r.suite, r.check, status, r.detail);
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let _ = writeln!(out, "{} checks, {failed} failed", rows.len());
    out
}
