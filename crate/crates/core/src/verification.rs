//! Mechanical checks of the samplers' provable structure.
//!
//! * [`coupling_check`] runs GB-SVGD and VP-SVGD on coupled inputs and
//!   confirms that GB particles never selected into a batch coincide with
//!   the matching VP real particles at every step.
//! * [`unbiasedness_mc`] tests `E⟨g_0, f⟩_H = ⟨h_{μ0}, f⟩_H` by Monte Carlo
//!   against probe functions `f = h(·, z)`.
//! * [`per_step_bound_audit`], [`g_norm_bound_audit`] and
//!   [`oracle_count_audit`] check recorded runs against closed-form bounds
//!   and counts.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engines::{
    gb_svgd_run, vp_svgd_run, Algorithm, OutputTime, RunConfig, RunOptions, RunRecord, Sampling, ScheduleKind,
    TrajectoryMode,
};
use crate::error::{invalid, Result};
use crate::exec::Exec;
use crate::kernels::{KernelConstants, KernelSpec};
use crate::particles::Particles;
use crate::targets::{init_radius, sample_ball_point, sample_uniform_ball, TargetModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub matched_count: usize,
    pub max_abs_deviation: f64,
    /// The coupling permutation `Λ`, block-sorted over its first `KT` entries.
    pub permutation: Vec<usize>,
    pub exec: String,
    pub pass: bool,
}

/// Compares untouched GB particles with VP real particles over whole
/// trajectories. `gb[t]` holds all `n` GB particles at step `t` and `vp[t]`
/// the `n` VP real particles; real slot `l − KT` is coupled to GB particle
/// `permutation[l]` for `KT ≤ l < n`. Returns `(matched_count, max_abs_deviation)`
/// where a particle counts as matched when its deviation never exceeds `tol`.
pub fn compare_coupled_trajectories(
    gb: &[Particles],
    vp: &[Particles],
    permutation: &[usize],
    kt: usize,
    tol: f64,
) -> Result<(usize, f64)> {
    if gb.len() != vp.len() {
        return Err(invalid(format!("trajectory lengths differ: {} vs {}", gb.len(), vp.len())));
    }
    let mut max_dev = 0.0f64;
    let mut matched = 0;
    for (l, &p) in permutation.iter().enumerate().skip(kt) {
        let mut worst = 0.0f64;
        for (g, v) in gb.iter().zip(vp) {
            let a = g.row(p);
            let b = v.row(l - kt);
            for (x, y) in a.iter().zip(b) {
                let dev = (x - y).abs();
                worst = if dev.is_nan() { f64::INFINITY } else { worst.max(dev) };
            }
        }
        if worst <= tol {
            matched += 1;
        }
        max_dev = max_dev.max(worst);
    }
    Ok((matched, max_dev))
}

/// Builds the coupled inputs, runs both samplers with a constant step `gamma`,
/// and compares trajectories.
///
/// With `x̄_0` the GB initialization and `Λ` a uniform permutation of `0..n`,
/// VP starts from `x_0^(l) = x̄_0^(Λ(l))` for `l < n` and fresh i.i.d. draws
/// for `n ≤ l < KT + n`; GB uses the batches `Λ(tK … tK+K−1)`. Each batch
/// block of `Λ` is sorted so that both samplers sum batch terms in the same
/// order, which makes equality bit-exact.
#[allow(clippy::too_many_arguments)]
pub fn coupling_check(
    n: usize,
    k: usize,
    t: usize,
    target: &TargetModel,
    kernel: &KernelSpec,
    gamma: f64,
    seed: u64,
    exec: Exec,
) -> Result<CouplingReport> {
    if k == 0 {
        return Err(invalid("batch size must be at least 1"));
    }
    let kt = k * t;
    if n <= kt {
        return Err(invalid(format!("coupling needs n > KT, got n = {n} and KT = {kt}")));
    }
    let dim = target.dim();
    let l = target.smoothness().l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xbar = sample_uniform_ball(dim, l, n, &mut rng)?;
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut rng);
    for block in permutation[..kt].chunks_mut(k) {
        block.sort_unstable();
    }
    let batches: Vec<Vec<usize>> = permutation[..kt].chunks(k).map(<[usize]>::to_vec).collect();
    let radius = init_radius(dim, l);
    let mut vp_init = Vec::with_capacity((kt + n) * dim);
    for &p in &permutation {
        vp_init.extend_from_slice(xbar.row(p));
    }
    for _ in 0..kt {
        vp_init.extend(sample_ball_point(dim, radius, &mut rng));
    }
    let vp_init = Particles::from_flat(dim, vp_init)?;

    let config = |algorithm| RunConfig {
        algorithm,
        n,
        k,
        t,
        schedule: ScheduleKind::Constant { gamma },
        sampling: Sampling::WithoutReplacement,
        output_time: OutputTime::Final,
        seed,
    };
    let options = |init, batches| RunOptions {
        exec,
        init: Some(init),
        batches,
        trajectory: Some(TrajectoryMode::Full),
        record_g_norm: false,
        ..Default::default()
    };
    let gb = gb_svgd_run(&config(Algorithm::Gb), target, kernel, options(xbar, Some(batches)))?;
    let vp = vp_svgd_run(&config(Algorithm::Vp), target, kernel, options(vp_init, None))?;
    let gb_traj = gb.trajectory.expect("full trajectory requested");
    let vp_traj = vp.trajectory.expect("full trajectory requested");
    let tol = if exec.is_parallel() { 1e-12 } else { 0.0 };
    let (matched_count, max_abs_deviation) = compare_coupled_trajectories(&gb_traj, &vp_traj, &permutation, kt, tol)?;
    Ok(CouplingReport {
        n,
        k,
        t,
        matched_count,
        max_abs_deviation,
        permutation,
        exec: exec.label().to_string(),
        pass: matched_count == n - kt && max_abs_deviation <= tol,
    })
}

/// Streaming mean and variance.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * (other.count / count),
            m2: self.m2 + other.m2 + delta * delta * (self.count * other.count / count),
        }
    }

    fn variance(&self) -> f64 {
        if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        }
    }
}

/// Draws one initial particle.
pub type InitSampler<'a> = &'a (dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync);

pub const MIN_TRIALS: usize = 10_000;
pub const DEFAULT_PLUGIN_SAMPLES: usize = 1_000_000;
const CHUNK: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub trials: usize,
    pub k: usize,
    /// Gap `E⟨g_0, f⟩ − ⟨h_{μ0}, f⟩` at the probe with the largest `|z|`.
    pub mean_gap: f64,
    pub std_err: f64,
    /// Largest `|z|` over probes.
    pub z_score: f64,
    pub probe_z: Vec<f64>,
    /// Sample variance of `⟨g_0, f_p⟩` across trials, per probe.
    pub trial_variance: Vec<f64>,
    pub g_norm_sq_mean: f64,
    /// Sample variance of `‖g_0‖²_H` across trials.
    pub g_norm_sq_variance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasednessSetup {
    pub k: usize,
    pub probe_count: usize,
    pub trials: usize,
    pub plugin_samples: usize,
    pub seed: u64,
}

/// Monte Carlo check of `E[⟨g_0, f_p⟩_H] = ⟨h_{μ0}, f_p⟩_H` with
/// `f_p = h(·, z_p)`, using `⟨h(·, x), h(·, z)⟩_H` in closed form. Each
/// trial draws a fresh batch of `K` initial particles. The right-hand side
/// is a plug-in average over `plugin_samples` independent draws.
pub fn unbiasedness_mc(
    target: &TargetModel,
    kernel: &KernelSpec,
    init: InitSampler,
    setup: UnbiasednessSetup,
    exec: Exec,
) -> Result<UnbiasednessReport> {
    let UnbiasednessSetup { k, probe_count, trials, plugin_samples, seed } = setup;
    if !kernel.is_smooth() {
        return Err(crate::SvgdError::UnsupportedKernel(
            kernel.family.name().into(),
            "unbiasedness needs a smooth kernel".into(),
        ));
    }
    if trials < MIN_TRIALS {
        return Err(invalid(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    if k == 0 || probe_count == 0 || plugin_samples == 0 {
        return Err(invalid("batch size, probe count and plug-in size must be positive"));
    }
    let rng_for = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    };
    let mut probe_rng = rng_for(0);
    let probes: Vec<Vec<f64>> = (0..probe_count).map(|_| init(&mut probe_rng)).collect();
    let probe_scores: Vec<Vec<f64>> = probes.iter().map(|z| target.metric_grad(z)).collect();
    let inner = |x: &[f64], gx: &[f64], p: usize| kernel.stein_inner_unchecked(x, gx, &probes[p], &probe_scores[p]);

    let plugin_chunks = plugin_samples.div_ceil(CHUNK);
    let plugin = exec
        .map(plugin_chunks, |c| {
            let mut rng = rng_for(1 + c as u64);
            let mut acc = vec![Welford::default(); probe_count];
            let size = CHUNK.min(plugin_samples - c * CHUNK);
            for _ in 0..size {
                let x = init(&mut rng);
                let gx = target.metric_grad(&x);
                for (p, w) in acc.iter_mut().enumerate() {
                    w.push(inner(&x, &gx, p));
                }
            }
            acc
        })
        .into_iter()
        .fold(vec![Welford::default(); probe_count], |acc, chunk| {
            acc.into_iter().zip(chunk).map(|(a, b)| a.merge(b)).collect()
        });

    let trial_chunk = CHUNK / k.max(1);
    let trial_chunks = trials.div_ceil(trial_chunk);
    let offset = 1 + plugin_chunks as u64;
    let (per_probe, g_sq) = exec
        .map(trial_chunks, |c| {
            let mut rng = rng_for(offset + c as u64);
            let mut acc = vec![Welford::default(); probe_count];
            let mut g_sq = Welford::default();
            let size = trial_chunk.min(trials - c * trial_chunk);
            let dim = target.dim();
            let mut xs = vec![0.0; k * dim];
            let mut gs = vec![0.0; k * dim];
            for _ in 0..size {
                for b in 0..k {
                    let x = init(&mut rng);
                    target.metric_grad_into(&x, &mut gs[b * dim..(b + 1) * dim]);
                    xs[b * dim..(b + 1) * dim].copy_from_slice(&x);
                }
                let row = |b: usize| (&xs[b * dim..(b + 1) * dim], &gs[b * dim..(b + 1) * dim]);
                for (p, w) in acc.iter_mut().enumerate() {
                    let total = (0..k).fold(0.0, |s, b| {
                        let (x, g) = row(b);
                        s + inner(x, g, p)
                    });
                    w.push(total / k as f64);
                }
                let mut norm_sq = 0.0;
                for a in 0..k {
                    for b in 0..k {
                        let ((xa, ga), (xb, gb)) = (row(a), row(b));
                        norm_sq += kernel.stein_inner_unchecked(xa, ga, xb, gb);
                    }
                }
                g_sq.push(norm_sq / (k * k) as f64);
            }
            (acc, g_sq)
        })
        .into_iter()
        .fold((vec![Welford::default(); probe_count], Welford::default()), |(acc, g), (chunk, cg)| {
            (acc.into_iter().zip(chunk).map(|(a, b)| a.merge(b)).collect(), g.merge(cg))
        });

    let mut probe_z = Vec::with_capacity(probe_count);
    let mut worst = (0.0f64, 0.0, 0.0);
    for (t, p) in per_probe.iter().zip(&plugin) {
        let gap = t.mean - p.mean;
        let se = (t.variance() / t.count + p.variance() / p.count).sqrt();
        let z = if gap == 0.0 {
            0.0
        } else if se > 0.0 {
            gap / se
        } else {
            f64::INFINITY * gap.signum()
        };
        if z.abs() >= worst.0.abs() {
            worst = (z, gap, se);
        }
        probe_z.push(z);
    }
    let z_score = probe_z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    Ok(UnbiasednessReport {
        trials,
        k,
        mean_gap: worst.1,
        std_err: worst.2,
        z_score,
        probe_z,
        trial_variance: per_probe.iter().map(Welford::variance).collect(),
        g_norm_sq_mean: g_sq.mean,
        g_norm_sq_variance: g_sq.variance(),
        pass: z_score <= 4.0,
    })
}

/// Sampler for the uniform distribution on `B(√(d/L))`.
pub fn uniform_ball_init(dim: usize, l: f64) -> impl Fn(&mut ChaCha8Rng) -> Vec<f64> + Sync {
    let radius = init_radius(dim, l);
    move |rng| sample_ball_point(dim, radius, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub step: usize,
    pub particle: usize,
    pub increase: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundAudit {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<BoundViolation>,
    /// Whether every recorded step size satisfies `γ ≤ 1/(2 A1 L)`.
    pub within_hypothesis: bool,
    pub pass: bool,
}

/// Per-step slack `γA3 + γL²A1 + γ²L(A1L/2 + A2)²`.
pub fn per_step_bound(gamma: f64, l: f64, c: &KernelConstants) -> f64 {
    gamma * c.a3 + gamma * l * l * c.a1 + gamma * gamma * l * (c.a1 * l / 2.0 + c.a2).powi(2)
}

/// Checks `F(x_{t+1}) − F(x_t) ≤ per_step_bound(γ_t) + 1e−9` for every
/// particle in the recorded potential trace.
pub fn per_step_bound_audit(record: &RunRecord, l: f64, constants: &KernelConstants) -> Result<BoundAudit> {
    let trace = record
        .potential_trace
        .as_ref()
        .ok_or_else(|| invalid("the record has no potential trace; rerun with potential tracking"))?;
    if record.schedule.is_adaptive() {
        return Err(invalid("the per-step bound needs a scalar step size"));
    }
    if trace.len() != record.steps.len() {
        return Err(invalid("potential trace and step records disagree in length"));
    }
    let cap = if l > 0.0 { 1.0 / (2.0 * constants.a1 * l) } else { f64::INFINITY };
    let mut audit =
        BoundAudit { checked: 0, violations: 0, first_violation: None, within_hypothesis: true, pass: true };
    for (t, step) in record.steps.iter().enumerate() {
        let Some(gamma) = step.gamma else { continue };
        audit.within_hypothesis &= gamma <= cap;
        let bound = per_step_bound(gamma, l, constants);
        let (before, after) = (&trace[t], &trace[t + 1]);
        for (particle, (f0, f1)) in before.iter().zip(after).enumerate() {
            audit.checked += 1;
            let increase = f1 - f0;
            if !(increase <= bound + 1e-9) {
                audit.violations += 1;
                audit.first_violation.get_or_insert(BoundViolation { step: t, particle, increase, bound });
            }
        }
    }
    audit.pass = audit.violations == 0;
    Ok(audit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GNormAudit {
    pub checked: usize,
    pub violations: usize,
    pub worst_ratio: f64,
    pub pass: bool,
}

/// Checks `‖g_t‖_H ≤ (1/K) Σ_b (B L ‖x_b‖ + B ‖∇F(0)‖ + B) + 1e−9` on every
/// recorded step.
pub fn g_norm_bound_audit(record: &RunRecord, l: f64, b: f64, grad_at_origin_norm: f64) -> Result<GNormAudit> {
    let mut audit = GNormAudit { checked: 0, violations: 0, worst_ratio: 0.0, pass: true };
    for step in &record.steps {
        let (Some(g), Some(sum)) = (step.g_norm, step.batch_norm_sum) else { continue };
        let k = step.batch.len() as f64;
        let bound = (b * l * sum + k * (b * grad_at_origin_norm + b)) / k;
        audit.checked += 1;
        audit.worst_ratio = audit.worst_ratio.max(g / bound);
        if !(g <= bound + 1e-9) {
            audit.violations += 1;
        }
    }
    if audit.checked == 0 && record.steps.iter().any(|s| s.gamma.is_some()) {
        return Err(invalid("the record has no g-norm trace"));
    }
    audit.pass = audit.violations == 0;
    Ok(audit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountAudit {
    pub expected_distinct: u64,
    pub recorded_distinct: u64,
    pub expected_paper: u64,
    pub recorded_paper: u64,
    pub pass: bool,
}

pub fn oracle_count_audit(record: &RunRecord, config: &RunConfig) -> CountAudit {
    let expected_distinct = config.expected_distinct_grad_evals();
    let expected_paper = config.expected_paper_grad_evals();
    CountAudit {
        expected_distinct,
        recorded_distinct: record.distinct_grad_evals,
        expected_paper,
        recorded_paper: record.paper_convention_grad_evals,
        pass: record.distinct_grad_evals == expected_distinct && record.paper_convention_grad_evals == expected_paper,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::{run, RunOptions};
    use crate::targets::gaussian_target;

    fn std_normal(d: usize) -> TargetModel {
        gaussian_target(vec![0.0; d], vec![1.0; d]).unwrap()
    }

    #[test]
    fn small_coupling_is_exact() {
        let target = std_normal(2);
        let r = coupling_check(4, 1, 2, &target, &KernelSpec::rbf(1.0), 0.1, 7, Exec::Sequential).unwrap();
        assert_eq!(r.matched_count, 2);
        assert_eq!(r.max_abs_deviation, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn zero_step_coupling_matches_everything() {
        let target = std_normal(2);
        let r = coupling_check(5, 2, 0, &target, &KernelSpec::rbf(1.0), 0.1, 1, Exec::Sequential).unwrap();
        assert_eq!(r.matched_count, 5);
        assert!(r.pass);
    }

    #[test]
    fn coupling_needs_spare_particles() {
        let target = std_normal(2);
        assert!(coupling_check(4, 2, 2, &target, &KernelSpec::rbf(1.0), 0.1, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn corrupted_trajectory_is_caught() {
        let p = sample_uniform_ball(2, 1.0, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let gb = vec![p.clone(), p.clone()];
        // KT = 1 and Λ = (0, 1, 2): real slots 0 and 1 pair with GB particles 1 and 2.
        let real = Particles::from_rows(&[p.row(1).to_vec(), p.row(2).to_vec(), vec![9.0, 9.0]]).unwrap();
        let mut vp = vec![real.clone(), real];
        assert_eq!(compare_coupled_trajectories(&gb, &vp, &[0, 1, 2], 1, 0.0).unwrap(), (2, 0.0));
        vp[1].row_mut(1)[0] += 1e-15;
        let (matched, dev) = compare_coupled_trajectories(&gb, &vp, &[0, 1, 2], 1, 0.0).unwrap();
        assert_eq!(matched, 1);
        assert!(dev > 0.0);
    }

    #[test]
    fn delta_init_has_zero_gap() {
        let target = std_normal(2);
        let point = |_: &mut ChaCha8Rng| vec![0.3, -0.4];
        for k in [1, 2] {
            let setup = UnbiasednessSetup { k, probe_count: 3, trials: MIN_TRIALS, plugin_samples: 1000, seed: 5 };
            let r = unbiasedness_mc(&target, &KernelSpec::rbf(1.0), &point, setup, Exec::Sequential).unwrap();
            assert_eq!(r.mean_gap, 0.0);
            assert_eq!(r.z_score, 0.0);
            assert!(r.pass);
        }
    }

    #[test]
    fn unbiasedness_rejects_few_trials_and_laplace() {
        let target = std_normal(2);
        let init = uniform_ball_init(2, 1.0);
        let setup = UnbiasednessSetup { k: 1, probe_count: 1, trials: 10, plugin_samples: 10, seed: 0 };
        assert!(unbiasedness_mc(&target, &KernelSpec::rbf(1.0), &init, setup, Exec::Sequential).is_err());
        let setup = UnbiasednessSetup { trials: MIN_TRIALS, ..setup };
        assert!(unbiasedness_mc(&target, &KernelSpec::laplace(1.0), &init, setup, Exec::Sequential).is_err());
    }

    fn tracked_run() -> (RunRecord, RunConfig) {
        let target = std_normal(2);
        let kernel = KernelSpec::rbf(1.0);
        let constants = kernel.analytic_constants(2).unwrap();
        let gamma = 0.5 / (2.0 * constants.a1);
        let config = RunConfig {
            algorithm: Algorithm::Vp,
            n: 5,
            k: 2,
            t: 20,
            schedule: ScheduleKind::Constant { gamma },
            sampling: Sampling::WithoutReplacement,
            output_time: OutputTime::Final,
            seed: 3,
        };
        let out = run(&config, &target, &kernel, RunOptions { track_potential: true, ..Default::default() }).unwrap();
        (out.record, config)
    }

    #[test]
    fn bound_audit_passes_and_catches_mutations() {
        let (record, _) = tracked_run();
        let c = KernelSpec::rbf(1.0).analytic_constants(2).unwrap();
        let audit = per_step_bound_audit(&record, 1.0, &c).unwrap();
        assert!(audit.pass && audit.within_hypothesis);
        assert_eq!(audit.checked, 20 * (40 + 5));

        let mut bad = record.clone();
        bad.potential_trace.as_mut().unwrap()[7][3] += 10.0;
        let audit = per_step_bound_audit(&bad, 1.0, &c).unwrap();
        assert!(!audit.pass);
        assert_eq!(audit.first_violation.unwrap().step, 6);

        let mut missing = record;
        missing.potential_trace = None;
        assert!(per_step_bound_audit(&missing, 1.0, &c).is_err());
    }

    #[test]
    fn g_norm_audit_passes_and_catches_mutations() {
        let (record, _) = tracked_run();
        let b = KernelSpec::rbf(1.0).analytic_constants(2).unwrap().b;
        assert!(g_norm_bound_audit(&record, 1.0, b, 0.0).unwrap().pass);
        let mut bad = record;
        bad.steps[4].g_norm = Some(1e3);
        assert!(!g_norm_bound_audit(&bad, 1.0, b, 0.0).unwrap().pass);
    }

    #[test]
    fn count_audit_catches_mutations() {
        let (record, config) = tracked_run();
        assert!(oracle_count_audit(&record, &config).pass);
        let mut bad = record.clone();
        bad.distinct_grad_evals += 1;
        assert!(!oracle_count_audit(&bad, &config).pass);
        let mut bad = record;
        bad.paper_convention_grad_evals -= 1;
        assert!(!oracle_count_audit(&bad, &config).pass);
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Welford::default(), Welford::default());
        xs[..37].iter().for_each(|&x| a.push(x));
        xs[37..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-14);
        assert!((m.variance() - all.variance()).abs() < 1e-14);
    }
}
