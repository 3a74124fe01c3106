//! The three update loops.
//!
//! Every sampler advances an ensemble with the same rule: given a batch
//! `b_1 < … < b_K` of particle indices, each particle moves by
//!
//! `x_i ← x_i − (γ/K) Σ_b [k(x_i, x_b) ∇F(x_b) − ∇₂k(x_i, x_b)]`,
//!
//! reading the pre-step state for every particle and summing the batch in
//! ascending index order. SVGD uses all particles as the batch; VP-SVGD uses
//! virtual particles `tK … tK+K−1` at step `t`; GB-SVGD draws the batch from
//! the ensemble itself. Batch gradients are computed once per step.

mod record;
mod schedule;

use std::ops::Range;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discrepancy::{ksd2_from_scores, rkhs_norm_from_scores, Estimator, MmdReference};
use crate::error::{invalid, Result, SvgdError};
use crate::exec::Exec;
use crate::kernels::{KernelConstants, KernelSpec};
use crate::particles::{norm, ParticleEnsemble, Particles, Role};
use crate::targets::{init_radius, sample_uniform_ball, TargetModel};

pub use record::{RunRecord, StepRecord};
pub use schedule::{make_schedule, step_caps, theory_eta, Binding, ScheduleKind, StepSchedule};

use schedule::ScheduleState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Svgd,
    Vp,
    Gb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    #[default]
    WithoutReplacement,
    WithReplacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputTime {
    /// `S` uniform on `{0, …, T−1}`.
    #[default]
    RandomS,
    /// The state after the last step.
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub n: usize,
    /// Batch size; ignored by SVGD.
    pub k: usize,
    pub t: usize,
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub output_time: OutputTime,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SvgdError::Config("n must be at least 1".into()));
        }
        if self.algorithm != Algorithm::Svgd && self.k == 0 {
            return Err(SvgdError::Config("batch size K must be at least 1".into()));
        }
        if self.algorithm == Algorithm::Gb && self.k > self.n {
            return Err(SvgdError::Config(format!("gb requires K <= n, got K = {} and n = {}", self.k, self.n)));
        }
        self.schedule.validate()
    }

    /// Effective batch size.
    pub fn batch_size(&self) -> usize {
        match self.algorithm {
            Algorithm::Svgd => self.n,
            _ => self.k,
        }
    }

    /// Number of particles the sampler maintains.
    pub fn ensemble_size(&self) -> usize {
        match self.algorithm {
            Algorithm::Vp => self.k * self.t + self.n,
            _ => self.n,
        }
    }

    /// Gradient evaluations a run performs: `KT` (vp, gb) or `nT` (svgd).
    pub fn expected_distinct_grad_evals(&self) -> u64 {
        (self.batch_size() * self.t) as u64
    }

    /// Gradient uses counted once per particle update: `K²T² + KTn` (vp),
    /// `KTn` (gb), `n²T` (svgd).
    pub fn expected_paper_grad_evals(&self) -> u64 {
        let (n, k, t) = (self.n as u64, self.batch_size() as u64, self.t as u64);
        match self.algorithm {
            Algorithm::Vp => k * k * t * t + k * t * n,
            Algorithm::Gb => k * t * n,
            Algorithm::Svgd => n * n * t,
        }
    }
}

/// Which states of the output-candidate particles a run keeps in memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    /// Every state `x_0 … x_T`.
    Full,
    /// Only the state at the output time, captured in a single pass.
    OutputOnly,
}

/// Discrepancies evaluated on the output-candidate particles at steps
/// `0, cadence, 2·cadence, …` and at `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPlan {
    pub cadence: usize,
    pub ksd: Option<(KernelSpec, Estimator)>,
    pub mmd: Option<MmdReference>,
}

impl MetricPlan {
    fn due(&self, step: usize, last: usize) -> bool {
        step.is_multiple_of(self.cadence) || step == last
    }
}

pub type Observer<'a> = &'a mut dyn FnMut(usize, &Particles);

pub struct RunOptions<'a> {
    pub exec: Exec,
    pub metrics: Option<MetricPlan>,
    /// Record `F` at every particle and state.
    pub track_potential: bool,
    /// Record `‖g_t‖_H` (smooth kernels only).
    pub record_g_norm: bool,
    /// Initial positions; defaults to i.i.d. uniform draws on `B(√(d/L))`.
    pub init: Option<Particles>,
    /// Explicit GB batches, one per step.
    pub batches: Option<Vec<Vec<usize>>>,
    /// Defaults to [`TrajectoryMode::Full`] for VP and
    /// [`TrajectoryMode::OutputOnly`] otherwise.
    pub trajectory: Option<TrajectoryMode>,
    /// Kernel constants for the theory schedule; estimated if absent.
    pub kernel_constants: Option<KernelConstants>,
    /// Called with the output-candidate particles whenever metrics are due.
    pub observer: Option<Observer<'a>>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            exec: Exec::default(),
            metrics: None,
            track_potential: false,
            record_g_norm: true,
            init: None,
            batches: None,
            trajectory: None,
            kernel_constants: None,
            observer: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub outputs: ParticleEnsemble,
    pub record: RunRecord,
    /// Output-candidate particles at every state, when retained.
    pub trajectory: Option<Vec<Particles>>,
}

const INIT_STREAM: u64 = 0;
const BATCH_STREAM: u64 = 1;
const OUTPUT_STREAM: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Update directions `φ_i = (1/K) Σ_b [k(x_i, x_b) g_b − ∇₂k(x_i, x_b)]` for
/// every particle, written row-major into `out`.
pub(crate) fn directions(
    exec: Exec,
    kernel: &KernelSpec,
    state: &Particles,
    batch: &[usize],
    grads: &[f64],
    out: &mut [f64],
) {
    let d = state.dim();
    let k = batch.len() as f64;
    exec.for_each_row(out, d, |i, phi| {
        let xi = state.row(i);
        phi.iter_mut().for_each(|p| *p = 0.0);
        let mut grad2 = vec![0.0; d];
        for (j, &b) in batch.iter().enumerate() {
            let xb = state.row(b);
            let kv = kernel.value_grad2(xi, xb, &mut grad2);
            let gb = &grads[j * d..(j + 1) * d];
            for c in 0..d {
                phi[c] += kv * gb[c] - grad2[c];
            }
        }
        phi.iter_mut().for_each(|p| *p /= k);
    });
}

fn batch_gradients(exec: Exec, target: &TargetModel, state: &Particles, batch: &[usize]) -> Vec<f64> {
    exec.map(batch.len(), |j| target.grad(state.row(batch[j]))).concat()
}

fn check_finite(state: &Particles, step: usize) -> Result<()> {
    match state.first_non_finite() {
        Some(particle) => Err(SvgdError::Divergence { step, particle }),
        None => Ok(()),
    }
}

/// One SVGD step on the whole ensemble with a constant step size.
pub fn svgd_step(
    ensemble: &ParticleEnsemble,
    target: &TargetModel,
    kernel: &KernelSpec,
    gamma: f64,
    exec: Exec,
) -> Result<ParticleEnsemble> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(invalid(format!("step size must be finite and >= 0, got {gamma}")));
    }
    if ensemble.is_empty() {
        return Err(invalid("cannot step an empty ensemble"));
    }
    if ensemble.dim() != target.dim() {
        return Err(SvgdError::DimensionMismatch { expected: target.dim(), got: ensemble.dim() });
    }
    let state = &ensemble.positions;
    let batch: Vec<usize> = (0..state.len()).collect();
    let grads = batch_gradients(exec, target, state, &batch);
    let mut phi = vec![0.0; state.as_flat().len()];
    directions(exec, kernel, state, &batch, &grads, &mut phi);
    let mut next = ensemble.clone();
    ScheduleState::new(StepSchedule::Constant { gamma }).apply(next.positions.as_flat_mut(), &phi);
    check_finite(&next.positions, ensemble.step_index)?;
    next.step_index += 1;
    Ok(next)
}

/// GB batch schedule for `config`: without replacement, consecutive blocks
/// of a random permutation of `0..n`, drawing a fresh permutation whenever
/// fewer than `K` unused entries remain; with replacement, `K` i.i.d.
/// uniform indices. Each batch is sorted ascending.
pub fn gb_batch_schedule(config: &RunConfig) -> Vec<Vec<usize>> {
    let mut rng = stream_rng(config.seed, BATCH_STREAM);
    let (n, k) = (config.n, config.k);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut pos = n;
    (0..config.t)
        .map(|_| {
            let mut batch = match config.sampling {
                Sampling::WithoutReplacement => {
                    if pos + k > n {
                        perm.shuffle(&mut rng);
                        pos = 0;
                    }
                    pos += k;
                    perm[pos - k..pos].to_vec()
                }
                Sampling::WithReplacement => (0..k).map(|_| rng.random_range(0..n)).collect(),
            };
            batch.sort_unstable();
            batch
        })
        .collect()
}

/// The output time `S` for `config`.
pub fn draw_output_time(config: &RunConfig) -> usize {
    match config.output_time {
        OutputTime::Final => config.t,
        OutputTime::RandomS if config.t == 0 => 0,
        OutputTime::RandomS => stream_rng(config.seed, OUTPUT_STREAM).random_range(0..config.t),
    }
}

fn default_init(config: &RunConfig, target: &TargetModel) -> Result<Particles> {
    let mut rng = stream_rng(config.seed, INIT_STREAM);
    sample_uniform_ball(target.dim(), target.smoothness().l, config.ensemble_size(), &mut rng)
}

pub fn vp_svgd_run(
    config: &RunConfig,
    target: &TargetModel,
    kernel: &KernelSpec,
    options: RunOptions,
) -> Result<RunOutput> {
    if config.algorithm != Algorithm::Vp {
        return Err(SvgdError::Config("vp_svgd_run needs algorithm = vp".into()));
    }
    if options.batches.is_some() {
        return Err(SvgdError::Config("vp batches are fixed by construction".into()));
    }
    let (k, kt) = (config.k, config.k * config.t);
    run_loop(config, target, kernel, options, kt..kt + config.n, |t| (t * k..(t + 1) * k).collect())
}

pub fn gb_svgd_run(
    config: &RunConfig,
    target: &TargetModel,
    kernel: &KernelSpec,
    mut options: RunOptions,
) -> Result<RunOutput> {
    if config.algorithm != Algorithm::Gb {
        return Err(SvgdError::Config("gb_svgd_run needs algorithm = gb".into()));
    }
    config.validate()?;
    let batches = match options.batches.take() {
        Some(b) => {
            if b.len() != config.t
                || b.iter().any(|batch| batch.len() != config.k || batch.iter().any(|&i| i >= config.n))
            {
                return Err(SvgdError::Config(format!(
                    "explicit batches must be {} batches of {} indices below {}",
                    config.t, config.k, config.n
                )));
            }
            b.into_iter()
                .map(|mut batch| {
                    batch.sort_unstable();
                    batch
                })
                .collect()
        }
        None => gb_batch_schedule(config),
    };
    run_loop(config, target, kernel, options, 0..config.n, |t| batches[t].clone())
}

pub fn svgd_run(
    config: &RunConfig,
    target: &TargetModel,
    kernel: &KernelSpec,
    options: RunOptions,
) -> Result<RunOutput> {
    if config.algorithm != Algorithm::Svgd {
        return Err(SvgdError::Config("svgd_run needs algorithm = svgd".into()));
    }
    if options.batches.is_some() {
        return Err(SvgdError::Config("svgd uses every particle in every step".into()));
    }
    let n = config.n;
    run_loop(config, target, kernel, options, 0..n, |_| (0..n).collect())
}

/// Dispatches on `config.algorithm`.
pub fn run(config: &RunConfig, target: &TargetModel, kernel: &KernelSpec, options: RunOptions) -> Result<RunOutput> {
    match config.algorithm {
        Algorithm::Svgd => svgd_run(config, target, kernel, options),
        Algorithm::Vp => vp_svgd_run(config, target, kernel, options),
        Algorithm::Gb => gb_svgd_run(config, target, kernel, options),
    }
}

fn run_loop(
    config: &RunConfig,
    target: &TargetModel,
    kernel: &KernelSpec,
    mut options: RunOptions,
    real: Range<usize>,
    batch_for: impl Fn(usize) -> Vec<usize>,
) -> Result<RunOutput> {
    config.validate()?;
    kernel.validate()?;
    let started = Instant::now();
    let exec = options.exec;
    let dim = target.dim();
    let m = config.ensemble_size();
    let mut state = match options.init.take() {
        Some(p) => {
            if p.len() != m || p.dim() != dim {
                return Err(SvgdError::Config(format!(
                    "initial positions must be {m} x {dim}, got {} x {}",
                    p.len(),
                    p.dim()
                )));
            }
            p
        }
        None => default_init(config, target)?,
    };
    check_finite(&state, 0)?;
    if let Some(plan) = &options.metrics {
        if plan.cadence == 0 {
            return Err(SvgdError::Config("metric cadence must be at least 1".into()));
        }
    }

    let kernel_constants = match (&config.schedule, options.kernel_constants.take()) {
        (ScheduleKind::Theory { .. }, None) => {
            let radius = 3.0 * init_radius(dim, target.smoothness().l.max(f64::MIN_POSITIVE)).max(1.0);
            Some(kernel.constants(dim, radius, config.seed))
        }
        (_, given) => given,
    };
    let schedule = make_schedule(&config.schedule, target, kernel_constants.as_ref(), config)?;
    let mut sched = ScheduleState::new(schedule);
    let record_g_norm = (options.record_g_norm || schedule.feasibility_bound().is_some()) && kernel.is_smooth();

    let chosen_s = draw_output_time(config);
    let mode = options.trajectory.unwrap_or(match config.algorithm {
        Algorithm::Vp => TrajectoryMode::Full,
        _ => TrajectoryMode::OutputOnly,
    });
    let calls_before = target.oracle_calls();
    let metric_before = target.metric_grad_evals();

    let mut trajectory = Vec::new();
    let mut captured = None;
    let mut potential_trace = options.track_potential.then(Vec::new);
    let mut steps = Vec::with_capacity(config.t + 1);
    let mut uses = 0u64;
    let mut phi = vec![0.0; m * dim];

    for t in 0..=config.t {
        let real_now = state.slice(real.start, real.end);
        let mut rec = StepRecord {
            step: t,
            gamma: None,
            batch: Vec::new(),
            g_norm: None,
            batch_norm_sum: None,
            max_particle_norm: real_now.max_norm(),
            ksd2: None,
            mmd2: None,
        };
        if let Some(plan) = &options.metrics {
            if plan.due(t, config.t) {
                if let Some((ksd_kernel, estimator)) = &plan.ksd {
                    let scores = exec.map(real_now.len(), |i| target.metric_grad(real_now.row(i))).concat();
                    let scores = Particles::from_flat(dim, scores)?;
                    rec.ksd2 = Some(ksd2_from_scores(&real_now, &scores, ksd_kernel, *estimator, exec)?.value);
                }
                if let Some(mmd) = &plan.mmd {
                    rec.mmd2 = Some(mmd.mmd2(&real_now, exec)?.value);
                }
                if let Some(observer) = options.observer.as_mut() {
                    observer(t, &real_now);
                }
            }
        }
        if let Some(trace) = potential_trace.as_mut() {
            trace.push(exec.map(m, |i| target.value(state.row(i))));
        }
        if t == chosen_s {
            captured = Some(real_now.clone());
        }
        if mode == TrajectoryMode::Full {
            trajectory.push(real_now);
        }
        if t == config.t {
            steps.push(rec);
            break;
        }

        target.begin_step(t);
        let batch = batch_for(t);
        let grads = batch_gradients(exec, target, &state, &batch);
        if record_g_norm {
            let batch_pts = state.select(&batch);
            let scores = Particles::from_flat(dim, grads.clone())?;
            let g = rkhs_norm_from_scores(&batch_pts, &scores, kernel, exec)?;
            rec.g_norm = Some(g);
            rec.batch_norm_sum = Some(batch.iter().map(|&b| norm(state.row(b))).sum());
            if let Some(bound) = schedule.feasibility_bound() {
                let product = schedule.gamma() * g;
                if product > bound {
                    return Err(SvgdError::Infeasible { step: t, product, bound });
                }
            }
        }
        directions(exec, kernel, &state, &batch, &grads, &mut phi);
        uses += (batch.len() * m) as u64;
        rec.gamma = Some(sched.apply(state.as_flat_mut(), &phi));
        check_finite(&state, t)?;
        rec.batch = batch;
        steps.push(rec);
    }

    let positions = captured.expect("output time lies within 0..=T");
    let mut outputs = ParticleEnsemble::new(positions.clone(), vec![Role::Real; positions.len()])?;
    outputs.step_index = chosen_s;
    let record = RunRecord {
        config: config.clone(),
        target: target.name().to_string(),
        dim,
        kernel: *kernel,
        schedule,
        exec: exec.label().to_string(),
        steps,
        potential_trace,
        distinct_grad_evals: target.oracle_calls() - calls_before,
        paper_convention_grad_evals: uses,
        metric_grad_evals: target.metric_grad_evals() - metric_before,
        wall_time_secs: started.elapsed().as_secs_f64(),
        seed: config.seed,
        chosen_s,
    };
    Ok(RunOutput { outputs, record, trajectory: (mode == TrajectoryMode::Full).then_some(trajectory) })
}

/// Roles of a VP ensemble: `KT` virtual particles followed by `n` real ones.
pub fn vp_roles(config: &RunConfig) -> Vec<Role> {
    let kt = config.k * config.t;
    (0..kt + config.n).map(|i| if i < kt { Role::Virtual } else { Role::Real }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::gaussian_target;

    fn cfg(algorithm: Algorithm, n: usize, k: usize, t: usize) -> RunConfig {
        RunConfig {
            algorithm,
            n,
            k,
            t,
            schedule: ScheduleKind::Constant { gamma: 0.1 },
            sampling: Sampling::WithoutReplacement,
            output_time: OutputTime::Final,
            seed: 42,
        }
    }

    fn std_normal(d: usize) -> TargetModel {
        gaussian_target(vec![0.0; d], vec![1.0; d]).unwrap()
    }

    #[test]
    fn single_particle_step_is_gradient_descent() {
        let target = std_normal(2);
        let ens = ParticleEnsemble::all_real(Particles::from_rows(&[vec![2.0, 0.0]]).unwrap());
        for h in [0.3, 1.0, 5.0] {
            let next = svgd_step(&ens, &target, &KernelSpec::rbf(h), 0.1, Exec::Sequential).unwrap();
            assert_eq!(next.positions.row(0), &[1.8, 0.0]);
            assert_eq!(next.step_index, 1);
        }
    }

    #[test]
    fn zero_step_leaves_ensemble_unchanged() {
        let target = std_normal(3);
        let p = sample_uniform_ball(3, 1.0, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let ens = ParticleEnsemble::all_real(p);
        let next = svgd_step(&ens, &target, &KernelSpec::rbf(1.0), 0.0, Exec::Sequential).unwrap();
        assert_eq!(next.positions, ens.positions);
    }

    #[test]
    fn symmetric_pair_stays_symmetric() {
        let target = std_normal(2);
        let mut ens = ParticleEnsemble::all_real(Particles::from_rows(&[vec![1.5, -0.5], vec![-1.5, 0.5]]).unwrap());
        for _ in 0..20 {
            ens = svgd_step(&ens, &target, &KernelSpec::imq(1.0), 0.05, Exec::Sequential).unwrap();
            let (a, b) = (ens.positions.row(0), ens.positions.row(1));
            assert_eq!(a[0], -b[0]);
            assert_eq!(a[1], -b[1]);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let target = std_normal(1);
        let ens = ParticleEnsemble::all_real(Particles::from_rows(&[vec![1e300], vec![-1e300]]).unwrap());
        let err = svgd_step(&ens, &target, &KernelSpec::rbf(1.0), 1e10, Exec::Sequential).unwrap_err();
        assert!(matches!(err, SvgdError::Divergence { step: 0, .. }));
    }

    #[test]
    fn zero_steps_return_initial_real_particles() {
        let target = std_normal(2);
        for alg in [Algorithm::Vp, Algorithm::Gb, Algorithm::Svgd] {
            let mut c = cfg(alg, 5, 2, 0);
            c.output_time = OutputTime::RandomS;
            let init = sample_uniform_ball(2, 1.0, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            let out =
                run(&c, &target, &KernelSpec::rbf(1.0), RunOptions { init: Some(init.clone()), ..Default::default() })
                    .unwrap();
            assert_eq!(out.outputs.positions, init);
            assert_eq!(out.record.distinct_grad_evals, 0);
            assert_eq!(out.record.paper_convention_grad_evals, 0);
        }
    }

    #[test]
    fn vp_single_step_matches_hand_rolled_update() {
        let target = std_normal(2);
        let kernel = KernelSpec::rbf(1.0);
        let c = cfg(Algorithm::Vp, 3, 1, 1);
        let out = vp_svgd_run(&c, &target, &kernel, RunOptions::default()).unwrap();
        let init = default_init(&c, &target).unwrap();
        let x0 = init.row(0);
        let g0 = target.grad(x0);
        for s in 1..4 {
            let xs = init.row(s);
            let mut grad2 = vec![0.0; 2];
            let kv = kernel.value_grad2(xs, x0, &mut grad2);
            let expected: Vec<f64> = (0..2).map(|c| xs[c] - 0.1 * ((kv * g0[c] - grad2[c]) / 1.0)).collect();
            assert_eq!(out.outputs.positions.row(s - 1), expected.as_slice());
        }
    }

    #[test]
    fn full_batch_gb_equals_svgd_step_bitwise() {
        let target = std_normal(3);
        let kernel = KernelSpec::rbf(0.7);
        let c = cfg(Algorithm::Gb, 9, 9, 1);
        let out = gb_svgd_run(&c, &target, &kernel, RunOptions::default()).unwrap();
        let init = default_init(&c, &target).unwrap();
        let step = svgd_step(&ParticleEnsemble::all_real(init), &target, &kernel, 0.1, Exec::Sequential).unwrap();
        assert_eq!(out.outputs.positions, step.positions);
    }

    #[test]
    fn without_replacement_batches_are_disjoint() {
        let c = cfg(Algorithm::Gb, 8, 2, 3);
        let batches = gb_batch_schedule(&c);
        assert_eq!(batches.len(), 3);
        let mut seen: Vec<usize> = batches.concat();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 6);
        assert!(batches.iter().all(|b| b.len() == 2 && b[0] < b[1]));
    }

    #[test]
    fn long_runs_restart_the_permutation_each_epoch() {
        let c = cfg(Algorithm::Gb, 7, 3, 10);
        let batches = gb_batch_schedule(&c);
        for epoch in batches.chunks(2) {
            let mut all = epoch.concat();
            all.sort_unstable();
            all.dedup();
            assert_eq!(all.len(), 3 * epoch.len());
        }
    }

    #[test]
    fn with_replacement_draws_in_range() {
        let mut c = cfg(Algorithm::Gb, 5, 4, 50);
        c.sampling = Sampling::WithReplacement;
        let batches = gb_batch_schedule(&c);
        assert!(batches.iter().flatten().all(|&i| i < 5));
        assert!(batches.iter().any(|b| b.windows(2).any(|w| w[0] == w[1])));
    }

    #[test]
    fn gb_rejects_oversized_batches() {
        let target = std_normal(2);
        let err = gb_svgd_run(&cfg(Algorithm::Gb, 3, 4, 1), &target, &KernelSpec::rbf(1.0), RunOptions::default())
            .unwrap_err();
        assert!(matches!(err, SvgdError::Config(msg) if msg.contains("K <= n")));
    }

    #[test]
    fn output_time_is_in_range() {
        for seed in 0..50 {
            let mut c = cfg(Algorithm::Vp, 2, 1, 7);
            c.output_time = OutputTime::RandomS;
            c.seed = seed;
            assert!(draw_output_time(&c) < 7);
        }
    }

    #[test]
    fn counts_match_closed_forms() {
        let target = std_normal(2);
        for (alg, n, k, t) in [(Algorithm::Vp, 4, 2, 3), (Algorithm::Gb, 6, 3, 4), (Algorithm::Svgd, 5, 0, 2)] {
            let c = cfg(alg, n, k, t);
            let out = run(&c, &target, &KernelSpec::rbf(1.0), RunOptions::default()).unwrap();
            assert_eq!(out.record.distinct_grad_evals, c.expected_distinct_grad_evals());
            assert_eq!(out.record.paper_convention_grad_evals, c.expected_paper_grad_evals());
        }
    }

    #[test]
    fn exec_paths_agree_bitwise() {
        let target = std_normal(3);
        let kernel = KernelSpec::matern32(1.3);
        let c = cfg(Algorithm::Gb, 30, 5, 12);
        let a = gb_svgd_run(&c, &target, &kernel, RunOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
        let b = gb_svgd_run(&c, &target, &kernel, RunOptions { exec: Exec::Parallel, ..Default::default() }).unwrap();
        assert_eq!(a.outputs, b.outputs);
        assert_eq!(a.record.steps, b.record.steps);
    }

    #[test]
    fn infeasible_theory_step_is_rejected() {
        let target = gaussian_target(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let mut c = cfg(Algorithm::Vp, 2, 1, 3);
        c.schedule = ScheduleKind::Theory { c: 1e6 };
        let far = Particles::from_rows(&vec![vec![400.0, 0.0]; 5]).unwrap();
        let err = vp_svgd_run(&c, &target, &KernelSpec::rbf(1.0), RunOptions { init: Some(far), ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, SvgdError::Infeasible { step: 0, .. }));
    }

    #[test]
    fn explicit_init_shape_is_checked() {
        let target = std_normal(2);
        let init = Particles::zeros(3, 2);
        let err = vp_svgd_run(
            &cfg(Algorithm::Vp, 3, 1, 2),
            &target,
            &KernelSpec::rbf(1.0),
            RunOptions { init: Some(init), ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(err, SvgdError::Config(_)));
    }

    #[test]
    fn roles_split_virtual_and_real() {
        let roles = vp_roles(&cfg(Algorithm::Vp, 2, 2, 3));
        assert_eq!(roles.iter().filter(|r| **r == Role::Virtual).count(), 6);
        assert_eq!(&roles[6..], &[Role::Real, Role::Real]);
    }
}
