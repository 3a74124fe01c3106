//! Target densities `π* ∝ exp(−F)`.
//!
//! A [`TargetModel`] wraps a hand-coded [`Potential`] together with its
//! smoothness and growth constants, an optional recentering shift, and two
//! call counters: `oracle_calls` for gradients requested by samplers and
//! `metric_grad_evals` for gradients requested by discrepancy metrics.

mod dataset;
mod gaussian;
mod logreg;
mod mixture;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SvgdError};
use crate::particles::{dot, norm, Particles};

pub use dataset::{
    load_covertype, read_dataset_cache, write_dataset_cache, CovertypeOptions, Dataset, COVERTYPE_FEATURES,
    COVERTYPE_ROWS, DATASET_MAGIC,
};
pub use gaussian::{gaussian_target, GaussianPotential};
pub use logreg::{
    bayes_logreg_target, predictive_accuracy, sample_logreg_prior, LogisticPotential, LogregOptions, LogregPrior,
};
pub use mixture::{mixture_target, MixturePotential};

/// A potential `F` with its gradient.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn grad_into(&self, x: &[f64], out: &mut [f64]);

    /// Called by the samplers once before each step. Potentials that draw
    /// per-step data batches use it; the rest ignore it.
    fn begin_step(&self, _step: usize) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantKind {
    Analytic,
    /// Estimated numerically on probes; bounds derived from it are estimates.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothness {
    pub l: f64,
    pub kind: ConstantKind,
}

/// `F(x) ≥ d1 ‖x‖^alpha − d2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub alpha: f64,
    pub d1: f64,
    pub d2: f64,
    pub kind: ConstantKind,
}

pub struct TargetModel {
    name: String,
    potential: Box<dyn Potential>,
    smoothness: Smoothness,
    growth: Growth,
    center_shift: Vec<f64>,
    oracle_calls: AtomicU64,
    metric_calls: AtomicU64,
}

impl std::fmt::Debug for TargetModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetModel")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("smoothness", &self.smoothness)
            .field("growth", &self.growth)
            .field("center_shift", &self.center_shift)
            .field("oracle_calls", &self.oracle_calls())
            .finish()
    }
}

/// Number of random probes in the construction-time gradient audit.
pub const GRADIENT_AUDIT_PROBES: usize = 100;
/// Relative tolerance (with a unit floor) of the construction-time audit.
pub const GRADIENT_AUDIT_TOL: f64 = 1e-5;

impl TargetModel {
    /// Wraps `potential` after checking its gradient against central finite
    /// differences of its value along random directions.
    pub fn new(
        name: impl Into<String>,
        potential: Box<dyn Potential>,
        smoothness: Smoothness,
        growth: Growth,
        probe_radius: f64,
    ) -> Result<Self> {
        if !(smoothness.l.is_finite() && smoothness.l >= 0.0) {
            return Err(invalid(format!("smoothness constant must be finite and >= 0, got {}", smoothness.l)));
        }
        if !(growth.alpha > 0.0 && growth.alpha <= 2.0) {
            return Err(invalid(format!("growth exponent must lie in (0, 2], got {}", growth.alpha)));
        }
        directional_gradient_audit(
            potential.as_ref(),
            probe_radius,
            GRADIENT_AUDIT_PROBES,
            GRADIENT_AUDIT_TOL,
            0x5eed,
        )?;
        let dim = potential.dim();
        Ok(Self {
            name: name.into(),
            potential,
            smoothness,
            growth,
            center_shift: vec![0.0; dim],
            oracle_calls: AtomicU64::new(0),
            metric_calls: AtomicU64::new(0),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    pub fn center_shift(&self) -> &[f64] {
        &self.center_shift
    }

    pub fn potential(&self) -> &dyn Potential {
        self.potential.as_ref()
    }

    /// Number of sampler gradient evaluations so far.
    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls.load(Ordering::Relaxed)
    }

    /// Number of metric-side gradient evaluations so far.
    pub fn metric_grad_evals(&self) -> u64 {
        self.metric_calls.load(Ordering::Relaxed)
    }

    fn shifted<'a>(&self, x: &'a [f64], buf: &'a mut Vec<f64>) -> &'a [f64] {
        if self.center_shift.iter().all(|&s| s == 0.0) {
            return x;
        }
        buf.clear();
        buf.extend(x.iter().zip(&self.center_shift).map(|(a, b)| a + b));
        buf
    }

    /// `F` in the (possibly recentered) sampling coordinates.
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::new();
        self.potential.value(self.shifted(x, &mut buf))
    }

    /// Sampler gradient; counts one oracle call.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.oracle_calls.fetch_add(1, Ordering::Relaxed);
        let mut buf = Vec::new();
        self.potential.grad_into(self.shifted(x, &mut buf), out);
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.grad_into(x, &mut out);
        out
    }

    /// Metric-side gradient; counted separately from oracle calls.
    pub fn metric_grad_into(&self, x: &[f64], out: &mut [f64]) {
        self.metric_calls.fetch_add(1, Ordering::Relaxed);
        let mut buf = Vec::new();
        self.potential.grad_into(self.shifted(x, &mut buf), out);
    }

    pub fn metric_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.metric_grad_into(x, &mut out);
        out
    }

    pub fn begin_step(&self, step: usize) {
        self.potential.begin_step(step);
    }

    /// Moves sampling coordinates back to the original parametrization.
    pub fn unshift(&self, particles: &mut Particles) {
        particles.translate(&self.center_shift);
    }

    /// Checks `F(x) ≥ d1‖x‖^α − d2` on `probes` points uniform in the ball of
    /// radius `radius`. Returns the first violating point, if any.
    pub fn growth_audit(&self, radius: f64, probes: usize, seed: u64) -> Option<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = self.growth;
        (0..probes)
            .map(|_| sample_ball_point(self.dim(), radius, &mut rng))
            .find(|x| self.value(x) < g.d1 * norm(x).powf(g.alpha) - g.d2 - 1e-9)
    }
}

/// Runs gradient descent with step `1/L` from the origin until
/// `‖∇F(x*)‖ ≤ √L`, then re-expresses the model in coordinates centered at
/// `x*`. Idempotent once the condition holds at the current center.
pub fn recenter(mut model: TargetModel, max_iters: usize) -> Result<TargetModel> {
    let l = model.smoothness.l;
    if !(l > 0.0) {
        return Err(invalid("recentering needs a positive smoothness constant"));
    }
    let target = l.sqrt();
    let dim = model.dim();
    let mut x = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    for iter in 0..=max_iters {
        model.grad_into(&x, &mut g);
        let gn = norm(&g);
        if !gn.is_finite() {
            return Err(SvgdError::Recenter { iters: iter, grad_norm: gn, target });
        }
        if gn <= target {
            for (s, xi) in model.center_shift.iter_mut().zip(&x) {
                *s += xi;
            }
            return Ok(model);
        }
        if iter == max_iters {
            return Err(SvgdError::Recenter { iters: max_iters, grad_norm: gn, target });
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= gi / l;
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// One point uniform in the ball of radius `radius` around the origin:
/// a Gaussian direction scaled to radius `radius · U^(1/d)`.
pub fn sample_ball_point<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut n = norm(&dir);
    while n == 0.0 {
        dir = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        n = norm(&dir);
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    dir.iter().map(|v| v / n * r).collect()
}

/// Initialization radius `√(d/L)`.
pub fn init_radius(dim: usize, l: f64) -> f64 {
    (dim as f64 / l).sqrt()
}

/// `n` i.i.d. draws from the uniform distribution on the ball of radius
/// `√(d/L)`.
pub fn sample_uniform_ball<R: Rng + ?Sized>(dim: usize, l: f64, n: usize, rng: &mut R) -> Result<Particles> {
    if n == 0 {
        return Err(invalid("need at least one particle"));
    }
    if !(l > 0.0) {
        return Err(invalid("uniform-ball initialization needs L > 0"));
    }
    let radius = init_radius(dim, l);
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        data.extend(sample_ball_point(dim, radius, rng));
    }
    Particles::from_flat(dim, data)
}

/// Compares `∇F(x)·v` with a central difference of `F` along random unit
/// directions `v` at random points in the ball of radius `radius`.
pub fn directional_gradient_audit(
    potential: &dyn Potential,
    radius: f64,
    probes: usize,
    tol: f64,
    seed: u64,
) -> Result<()> {
    let dim = potential.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; dim];
    for probe in 0..probes {
        let x = sample_ball_point(dim, radius, &mut rng);
        let eps = 1e-5 * norm(&x).max(1.0);
        let v = sample_ball_point(dim, 1.0, &mut rng);
        let vn = norm(&v).max(1e-300);
        let v: Vec<f64> = v.iter().map(|c| c / vn).collect();
        potential.grad_into(&x, &mut g);
        let analytic = dot(&g, &v);
        let plus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
        let numeric = (potential.value(&plus) - potential.value(&minus)) / (2.0 * eps);
        let scale = 1.0f64.max(analytic.abs()).max(numeric.abs());
        if !((analytic - numeric).abs() <= tol * scale) {
            return Err(SvgdError::GradientAudit { probe, analytic, numeric });
        }
    }
    Ok(())
}

/// Largest `‖∇²F‖` found by power iteration on finite-difference
/// Hessian-vector products at the origin and `probes` random points.
pub(crate) fn estimate_smoothness(potential: &dyn Potential, radius: f64, probes: usize, seed: u64) -> f64 {
    let dim = potential.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-5;
    let mut gp = vec![0.0; dim];
    let mut gm = vec![0.0; dim];
    let mut best = 0.0f64;
    for probe in 0..=probes {
        let x = if probe == 0 { vec![0.0; dim] } else { sample_ball_point(dim, radius, &mut rng) };
        let mut v = sample_ball_point(dim, 1.0, &mut rng);
        let mut lambda = 0.0;
        for _ in 0..50 {
            let vn = norm(&v);
            if vn == 0.0 {
                break;
            }
            v.iter_mut().for_each(|c| *c /= vn);
            let plus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + eps * b).collect();
            let minus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - eps * b).collect();
            potential.grad_into(&plus, &mut gp);
            potential.grad_into(&minus, &mut gm);
            let hv: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
            lambda = norm(&hv);
            v = hv;
        }
        best = best.max(lambda);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_uniform_ball(4, 2.0, 5000, &mut rng).unwrap();
        let r = init_radius(4, 2.0);
        assert!(p.rows().all(|x| norm(x) <= r + 1e-12));
    }

    #[test]
    fn ball_sampling_is_deterministic() {
        let a = sample_uniform_ball(3, 1.0, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_uniform_ball(3, 1.0, 10, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ball_sampling_moments() {
        let d = 3;
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let p = sample_uniform_ball(d, 1.0, n, &mut rng).unwrap();
        let r = init_radius(d, 1.0);
        // Coordinate variance of the uniform ball is R²/(d+2).
        let se = (r * r / (d as f64 + 2.0) / n as f64).sqrt();
        for j in 0..d {
            let mean = p.rows().map(|x| x[j]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 3.0 * se, "coordinate {j}: mean {mean}, se {se}");
        }
        let m2 = p.rows().map(|x| dot(x, x)).sum::<f64>() / n as f64;
        let expected = r * r * d as f64 / (d as f64 + 2.0);
        assert!((m2 - expected).abs() <= 0.01 * expected, "{m2} vs {expected}");
    }

    #[test]
    fn empty_ball_sample_rejected() {
        assert!(sample_uniform_ball(2, 1.0, 0, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
