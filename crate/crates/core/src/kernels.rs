//! Positive definite kernels on `R^d`, their derivatives, and the closed-form
//! Stein inner product used by every discrepancy estimate in the crate.
//!
//! Conventions, with `r = ‖x − y‖` and bandwidth `h > 0`:
//!
//! | family     | `k(x, y)`                         |
//! |------------|-----------------------------------|
//! | `rbf`      | `exp(−r² / (2h))` (h is a squared length scale) |
//! | `imq`      | `(1 + r²/h)^(−1/2)`               |
//! | `matern32` | `(1 + √3 r/h) · exp(−√3 r/h)`     |
//! | `laplace`  | `exp(−r/h)`                       |
//!
//! All gradients are taken with respect to the second argument. The Laplace
//! kernel is not differentiable on the diagonal; there the gradient is
//! defined as the zero vector (a valid subgradient) and flagged, and second
//! derivatives are refused.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SvgdError};
use crate::particles::{dot, norm, sq_dist, Particles};
use crate::targets::sample_ball_point;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Rbf,
    Imq,
    Matern32,
    Laplace,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] =
        [KernelFamily::Rbf, KernelFamily::Imq, KernelFamily::Matern32, KernelFamily::Laplace];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Rbf => "rbf",
            KernelFamily::Imq => "imq",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Laplace => "laplace",
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = SvgdError;

    fn from_str(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid(format!("unknown kernel family `{s}`")))
    }
}

/// A kernel family together with its bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth: f64,
}

/// Gradient of `k(x, ·)` at `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grad2 {
    pub grad: Vec<f64>,
    /// Set when the Laplace kernel was differentiated on its diagonal and the
    /// zero subgradient was returned.
    pub diagonal_subgradient: bool,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, bandwidth: f64) -> Result<Self> {
        let spec = Self { family, bandwidth };
        spec.validate()?;
        Ok(spec)
    }

    pub fn rbf(bandwidth: f64) -> Self {
        Self::new(KernelFamily::Rbf, bandwidth).expect("bandwidth must be positive and finite")
    }

    pub fn laplace(bandwidth: f64) -> Self {
        Self::new(KernelFamily::Laplace, bandwidth).expect("bandwidth must be positive and finite")
    }

    pub fn imq(bandwidth: f64) -> Self {
        Self::new(KernelFamily::Imq, bandwidth).expect("bandwidth must be positive and finite")
    }

    pub fn matern32(bandwidth: f64) -> Self {
        Self::new(KernelFamily::Matern32, bandwidth).expect("bandwidth must be positive and finite")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(invalid(format!("kernel bandwidth must be positive and finite, got {}", self.bandwidth)));
        }
        Ok(())
    }

    /// Whether second derivatives exist everywhere, which the Stein inner
    /// product on the diagonal requires.
    pub fn is_smooth(&self) -> bool {
        self.family != KernelFamily::Laplace
    }

    /// Kernels that depend only on `x − y`.
    pub fn is_translation_invariant(&self) -> bool {
        true
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_pair(x, y)?;
        Ok(self.value(x, y))
    }

    pub fn grad2(&self, x: &[f64], y: &[f64]) -> Result<Grad2> {
        check_pair(x, y)?;
        let mut grad = vec![0.0; x.len()];
        let (_, diagonal_subgradient) = self.value_grad2_flagged(x, y, &mut grad);
        Ok(Grad2 { grad, diagonal_subgradient })
    }

    /// `Σ_i ∂²k/∂x_i∂y_i` at `(x, y)`.
    pub fn mixed_partial_trace(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_pair(x, y)?;
        self.trace_checked(x, y)
    }

    /// `⟨h(·, x), h(·, y)⟩_H` for `h(z, y) = k(z, y) ∇F(y) − ∇₂k(z, y)`, given
    /// the potential gradients `gx = ∇F(x)` and `gy = ∇F(y)`.
    pub fn stein_inner(&self, x: &[f64], gx: &[f64], y: &[f64], gy: &[f64]) -> Result<f64> {
        check_pair(x, y)?;
        check_pair(x, gx)?;
        check_pair(y, gy)?;
        let trace = self.trace_checked(x, y)?;
        Ok(self.stein_terms(x, gx, y, gy) + trace)
    }

    /// Kernel value without argument validation.
    #[inline]
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value_and_scale(sq_dist(x, y)).0
    }

    /// Writes `∇₂k(x, y)` into `out` and returns `k(x, y)`.
    #[inline]
    pub fn value_grad2(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> f64 {
        self.value_grad2_flagged(x, y, out).0
    }

    fn value_grad2_flagged(&self, x: &[f64], y: &[f64], out: &mut [f64]) -> (f64, bool) {
        let (k, scale, flagged) = self.value_and_scale(sq_dist(x, y));
        for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
            *o = scale * (xi - yi);
        }
        (k, flagged)
    }

    /// Returns `(k, c, flagged)` with `∇₂k(x, y) = c · (x − y)` at squared
    /// distance `s`.
    #[inline]
    fn value_and_scale(&self, s: f64) -> (f64, f64, bool) {
        let h = self.bandwidth;
        match self.family {
            KernelFamily::Rbf => {
                let k = (-s / (2.0 * h)).exp();
                (k, k / h, false)
            }
            KernelFamily::Imq => {
                let u = 1.0 + s / h;
                let k = 1.0 / u.sqrt();
                (k, k / (u * h), false)
            }
            KernelFamily::Matern32 => {
                let a = 3f64.sqrt() / h;
                let ar = a * s.sqrt();
                let e = (-ar).exp();
                ((1.0 + ar) * e, a * a * e, false)
            }
            KernelFamily::Laplace => {
                let r = s.sqrt();
                let k = (-r / h).exp();
                if r == 0.0 {
                    (k, 0.0, true)
                } else {
                    (k, k / (h * r), false)
                }
            }
        }
    }

    fn trace_checked(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if self.family == KernelFamily::Laplace && x == y {
            return Err(SvgdError::UnsupportedKernel(
                "laplace".into(),
                "second derivative is undefined on the diagonal".into(),
            ));
        }
        Ok(self.trace(x, y))
    }

    /// Mixed-partial trace without validation. NaN for Laplace on the diagonal.
    #[inline]
    pub(crate) fn trace(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = x.len() as f64;
        let s = sq_dist(x, y);
        let h = self.bandwidth;
        match self.family {
            KernelFamily::Rbf => (d / h - s / (h * h)) * (-s / (2.0 * h)).exp(),
            KernelFamily::Imq => {
                let u = 1.0 + s / h;
                (d / h) * u.powf(-1.5) - (3.0 * s / (h * h)) * u.powf(-2.5)
            }
            KernelFamily::Matern32 => {
                let a = 3f64.sqrt() / h;
                let ar = a * s.sqrt();
                a * a * (-ar).exp() * (d - ar)
            }
            KernelFamily::Laplace => {
                let r = s.sqrt();
                if r == 0.0 {
                    f64::NAN
                } else {
                    (-r / h).exp() * ((d - 1.0) / (h * r) - 1.0 / (h * h))
                }
            }
        }
    }

    /// The three first-order terms of the Stein inner product:
    /// `k gx·gy − gx·∇₂k(x, y) − gy·∇₂k(y, x)`, using `∇₂k(y, x) = −∇₂k(x, y)`.
    #[inline]
    fn stein_terms(&self, x: &[f64], gx: &[f64], y: &[f64], gy: &[f64]) -> f64 {
        let (k, scale, _) = self.value_and_scale(sq_dist(x, y));
        let mut cross = 0.0;
        for i in 0..x.len() {
            cross += (gx[i] - gy[i]) * (x[i] - y[i]);
        }
        k * dot(gx, gy) - scale * cross
    }

    /// Stein inner product without validation; NaN for Laplace on the diagonal.
    #[inline]
    pub fn stein_inner_unchecked(&self, x: &[f64], gx: &[f64], y: &[f64], gy: &[f64]) -> f64 {
        self.stein_terms(x, gx, y, gy) + self.trace(x, y)
    }

    /// Closed-form Assumption constants, available for `rbf` only.
    pub fn analytic_constants(&self, dim: usize) -> Option<KernelConstants> {
        if self.family != KernelFamily::Rbf {
            return None;
        }
        let h = self.bandwidth;
        let a1 = if 2.0 * h <= 1.0 { 1.0 } else { 2.0 * h * (-(2.0 * h - 1.0) / (2.0 * h)).exp() };
        Some(KernelConstants {
            b: (dim as f64 / h).sqrt().max(1.0),
            a1,
            a2: (-0.5f64).exp() / h.sqrt(),
            a3: 2.0 / (h * std::f64::consts::E),
            source: ConstantSource::Analytic,
            gradient_norm_in_rkhs: true,
        })
    }

    /// Analytic constants where available, otherwise the empirical audit over
    /// the ball of radius `radius` around the origin.
    pub fn constants(&self, dim: usize, radius: f64, seed: u64) -> KernelConstants {
        self.analytic_constants(dim).unwrap_or_else(|| {
            audit_kernel_assumptions(
                self,
                dim,
                &ProbeRegion::Ball { center: vec![0.0; dim], radius },
                MIN_AUDIT_PAIRS,
                seed,
            )
            .constants
        })
    }

    /// Median-heuristic bandwidth for `particles`, in this family's convention.
    /// Not used unless requested.
    pub fn median_heuristic(family: KernelFamily, particles: &Particles) -> Result<Self> {
        let m = particles.len();
        if m < 2 {
            return Err(invalid("median heuristic needs at least two particles"));
        }
        let mut dists = Vec::with_capacity(m * (m - 1) / 2);
        for i in 0..m {
            for j in i + 1..m {
                dists.push(sq_dist(particles.row(i), particles.row(j)).sqrt());
            }
        }
        dists.sort_by(f64::total_cmp);
        let med = dists[dists.len() / 2].max(1e-12);
        let bandwidth = match family {
            KernelFamily::Rbf => med * med / (2.0 * ((m + 1) as f64).ln()),
            _ => med,
        };
        Self::new(family, bandwidth)
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(SvgdError::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.is_empty() {
        return Err(invalid("empty input vector"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("non-finite kernel input"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ConstantSource {
    Analytic,
    Empirical { probe: String, pairs: usize },
}

/// Constants of the bounded-norm and kernel-decay assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    pub b: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub source: ConstantSource,
    /// False when `∇₂k(·, y)` has no finite RKHS norm on the probes (Laplace),
    /// in which case `b` covers only `‖k(·, y)‖`.
    pub gradient_norm_in_rkhs: bool,
}

/// Where audit probe pairs are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProbeRegion {
    Ball { center: Vec<f64>, radius: f64 },
    Point { at: Vec<f64> },
}

impl ProbeRegion {
    fn describe(&self) -> String {
        match self {
            ProbeRegion::Ball { center, radius } => {
                format!("uniform ball, radius {radius}, center norm {}", norm(center))
            }
            ProbeRegion::Point { at } => format!("single point, norm {}", norm(at)),
        }
    }

    fn sample(&self, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            ProbeRegion::Ball { center, radius } => {
                let mut p = sample_ball_point(dim, *radius, rng);
                for (v, c) in p.iter_mut().zip(center) {
                    *v += c;
                }
                p
            }
            ProbeRegion::Point { at } => at.clone(),
        }
    }
}

pub const MIN_AUDIT_PAIRS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not a failure, but an assumption the theory needs does not hold.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAudit {
    pub spec: KernelSpec,
    pub dim: usize,
    pub constants: KernelConstants,
    pub analytic: Option<KernelConstants>,
    pub checks: Vec<AuditCheck>,
}

impl KernelAudit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }
}

struct Worst {
    excess: f64,
    pair: Option<(Vec<f64>, Vec<f64>)>,
}

impl Worst {
    fn new() -> Self {
        Self { excess: f64::NEG_INFINITY, pair: None }
    }

    fn offer(&mut self, excess: f64, x: &[f64], y: &[f64]) {
        if excess > self.excess {
            self.excess = excess;
            self.pair = Some((x.to_vec(), y.to_vec()));
        }
    }

    fn into_check(self, name: &str, tol: f64, what: &str) -> AuditCheck {
        let status = if self.excess <= tol { CheckStatus::Pass } else { CheckStatus::Fail };
        AuditCheck {
            name: name.into(),
            status,
            detail: format!("largest excess over {what}: {:.3e}", self.excess),
            witness: if status == CheckStatus::Fail { self.pair } else { None },
        }
    }
}

/// Estimates the kernel constants on random probe pairs and checks the
/// decay inequalities. The analytic constants, when they exist, are checked
/// against the same probes. Violations are reported, never raised.
pub fn audit_kernel_assumptions(
    spec: &KernelSpec,
    dim: usize,
    probe: &ProbeRegion,
    pairs: usize,
    seed: u64,
) -> KernelAudit {
    let pairs = pairs.max(MIN_AUDIT_PAIRS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grad = vec![0.0; dim];

    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    let mut a3 = 0.0f64;
    let mut b_value = 0.0f64;
    let mut b_grad = 0.0f64;
    let mut diagonal_hit: Option<Vec<f64>> = None;
    let mut negative = Worst::new();
    let mut asym = Worst::new();
    let mut samples: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(pairs);

    for i in 0..pairs {
        let x = probe.sample(dim, &mut rng);
        // Every tenth pair sits on the diagonal so the supremum over
        // coincident points is always probed.
        let y = if i % 10 == 0 { x.clone() } else { probe.sample(dim, &mut rng) };
        let k = spec.value(&x, &y);
        let (_, flagged) = spec.value_grad2_flagged(&x, &y, &mut grad);
        let r2 = sq_dist(&x, &y);
        let gnorm = norm(&grad);

        negative.offer(-k, &x, &y);
        asym.offer((k - spec.value(&y, &x)).abs(), &x, &y);
        a1 = a1.max(k * (1.0 + r2));
        b_value = b_value.max(spec.value(&y, &y).sqrt());
        if flagged {
            diagonal_hit.get_or_insert(x.clone());
        } else {
            a2 = a2.max(gnorm);
            if k > 0.0 {
                a3 = a3.max(gnorm * gnorm / k);
            }
        }
        let t = spec.trace(&y, &y);
        if t.is_finite() {
            b_grad = b_grad.max(t.max(0.0).sqrt());
        }
        samples.push((x, y));
    }

    let floor = f64::EPSILON;
    let smooth = spec.is_smooth();
    let constants = KernelConstants {
        b: b_value.max(if smooth { b_grad } else { 0.0 }).max(floor),
        a1: a1.max(floor),
        a2: a2.max(floor),
        a3: a3.max(floor),
        source: ConstantSource::Empirical { probe: probe.describe(), pairs },
        gradient_norm_in_rkhs: smooth,
    };
    let analytic = spec.analytic_constants(dim);
    let reference = analytic.clone().unwrap_or_else(|| constants.clone());

    let tol = 1e-12;
    let mut decay = Worst::new();
    let mut bounded_grad = Worst::new();
    let mut grad_vs_value = Worst::new();
    for (x, y) in &samples {
        let k = spec.value(x, y);
        let (_, flagged) = spec.value_grad2_flagged(x, y, &mut grad);
        let r2 = sq_dist(x, y);
        decay.offer(k - reference.a1 / (1.0 + r2), x, y);
        if !flagged {
            let g = norm(&grad);
            bounded_grad.offer(g - reference.a2, x, y);
            grad_vs_value.offer(g * g - reference.a3 * k, x, y);
        }
    }

    let mut checks = vec![
        negative.into_check("kernel nonnegative", 0.0, "0 of -k"),
        asym.into_check("symmetry", 0.0, "|k(x,y) - k(y,x)|"),
        decay.into_check("decay k <= A1/(1+r^2)", tol, "A1/(1+r^2)"),
        bounded_grad.into_check("gradient bound |grad2 k| <= A2", tol, "A2"),
        grad_vs_value.into_check("|grad2 k|^2 <= A3 k", tol, "A3 k"),
    ];
    if let Some(x) = diagonal_hit {
        checks.push(AuditCheck {
            name: "differentiable on the diagonal".into(),
            status: CheckStatus::Flag,
            detail: "gradient undefined at x = y; zero subgradient used".into(),
            witness: Some((x.clone(), x)),
        });
    }
    if !smooth {
        checks.push(AuditCheck {
            name: "grad2 k(., y) in the RKHS".into(),
            status: CheckStatus::Flag,
            detail: "mixed partial trace diverges on the diagonal; B covers only ||k(., y)||".into(),
            witness: None,
        });
    }

    KernelAudit { spec: *spec, dim, constants, analytic, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rbf_coincident_points() {
        let k = KernelSpec::rbf(1.0);
        for d in 1..6 {
            let x = vec![0.3; d];
            assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn reference_values() {
        let rbf = KernelSpec::rbf(1.0);
        assert_relative_eq!(rbf.eval(&[0.0], &[1.0]).unwrap(), (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(rbf.eval(&[0.0], &[1.0]).unwrap(), 0.606_530_659_712_633_4, max_relative = 1e-15);
        let lap = KernelSpec::laplace(1.0);
        assert_relative_eq!(
            lap.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            0.006_737_946_999_085_467,
            max_relative = 1e-14
        );
    }

    #[test]
    fn rejects_bad_input() {
        let k = KernelSpec::rbf(1.0);
        assert!(matches!(k.eval(&[0.0], &[0.0, 1.0]), Err(SvgdError::DimensionMismatch { .. })));
        assert!(matches!(k.eval(&[f64::NAN], &[0.0]), Err(SvgdError::InvalidArgument(_))));
        assert!(KernelSpec::new(KernelFamily::Rbf, 0.0).is_err());
        assert!(KernelSpec::new(KernelFamily::Rbf, f64::INFINITY).is_err());
        assert!("gaussian".parse::<KernelFamily>().is_err());
        assert_eq!("matern32".parse::<KernelFamily>().unwrap(), KernelFamily::Matern32);
    }

    #[test]
    fn grad2_reference_values() {
        let rbf = KernelSpec::rbf(1.0);
        let g = rbf.grad2(&[0.0], &[1.0]).unwrap();
        assert_relative_eq!(g.grad[0], -(-0.5f64).exp(), max_relative = 1e-15);
        for h in [0.3, 1.0, 4.0] {
            let g = KernelSpec::rbf(h).grad2(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
            assert_eq!(g.grad, vec![0.0, 0.0]);
            assert!(!g.diagonal_subgradient);
        }
    }

    #[test]
    fn laplace_diagonal_is_flagged() {
        let lap = KernelSpec::laplace(1.0);
        let g = lap.grad2(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(g.grad, vec![0.0, 0.0]);
        assert!(g.diagonal_subgradient);
        assert!(lap.mixed_partial_trace(&[1.0], &[1.0]).is_err());
        assert!(lap.stein_inner(&[1.0], &[0.0], &[1.0], &[0.0]).is_err());
        assert!(lap.mixed_partial_trace(&[1.0], &[2.0]).is_ok());
    }

    #[test]
    fn trace_reference_values() {
        let rbf = KernelSpec::rbf(1.0);
        assert_relative_eq!(rbf.mixed_partial_trace(&[0.0; 5], &[0.0; 5]).unwrap(), 5.0);
        assert_relative_eq!(KernelSpec::rbf(2.0).mixed_partial_trace(&[0.0], &[0.0]).unwrap(), 0.5);
        assert_eq!(rbf.mixed_partial_trace(&[0.0], &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn stein_inner_reference_values() {
        let rbf = KernelSpec::rbf(1.0);
        let z = [0.0; 3];
        assert_relative_eq!(rbf.stein_inner(&z, &z, &z, &z).unwrap(), 3.0);
        let far = [1e6, 0.0, 0.0];
        for family in KernelFamily::ALL {
            let k = KernelSpec::new(family, 1.0).unwrap();
            assert!(k.stein_inner(&z, &z, &far, &z).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_rbf_constants() {
        let c = KernelSpec::rbf(1.0).analytic_constants(2).unwrap();
        assert_relative_eq!(c.a1, 2.0 * (-0.5f64).exp());
        assert_relative_eq!(c.a2, (-0.5f64).exp());
        assert_relative_eq!(c.a3, 2.0 / std::f64::consts::E);
        assert_relative_eq!(c.b, 2f64.sqrt());
        assert_eq!(KernelSpec::rbf(0.25).analytic_constants(1).unwrap().a1, 1.0);
        assert!(KernelSpec::laplace(1.0).analytic_constants(2).is_none());
    }

    #[test]
    fn audit_rbf_ball_passes() {
        let probe = ProbeRegion::Ball { center: vec![0.0, 0.0], radius: 5.0 };
        let audit = audit_kernel_assumptions(&KernelSpec::rbf(1.0), 2, &probe, 10_000, 7);
        assert!(audit.passed(), "{:?}", audit.checks);
        assert!(audit.checks.iter().all(|c| c.status == CheckStatus::Pass));
        let analytic = audit.analytic.unwrap();
        // Empirical suprema never exceed the analytic ones.
        assert!(audit.constants.a1 <= analytic.a1 + 1e-12);
        assert!(audit.constants.a2 <= analytic.a2 + 1e-12);
        assert!(audit.constants.a3 <= analytic.a3 + 1e-12);
    }

    #[test]
    fn audit_laplace_flags_diagonal() {
        let probe = ProbeRegion::Ball { center: vec![0.0, 0.0], radius: 3.0 };
        let audit = audit_kernel_assumptions(&KernelSpec::laplace(1.0), 2, &probe, 10_000, 3);
        assert!(audit.passed());
        let a3 = audit.checks.iter().find(|c| c.name.starts_with("|grad2 k|^2")).unwrap();
        assert_eq!(a3.status, CheckStatus::Pass);
        assert!(audit
            .checks
            .iter()
            .any(|c| c.name == "differentiable on the diagonal" && c.status == CheckStatus::Flag));
        assert!(!audit.constants.gradient_norm_in_rkhs);
    }

    #[test]
    fn audit_single_point_region() {
        let probe = ProbeRegion::Point { at: vec![0.5, -0.5] };
        let audit = audit_kernel_assumptions(&KernelSpec::rbf(1.0), 2, &probe, 10, 1);
        assert_eq!(audit.constants.a1, 1.0);
        let decay = audit.checks.iter().find(|c| c.name.starts_with("decay")).unwrap();
        assert_eq!(decay.status, CheckStatus::Pass);
        assert!(audit.constants.a2 > 0.0);
    }

    #[test]
    fn median_heuristic_is_positive() {
        let p = Particles::from_rows(&[vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        let k = KernelSpec::median_heuristic(KernelFamily::Laplace, &p).unwrap();
        assert_eq!(k.bandwidth, 2.0);
        assert!(KernelSpec::median_heuristic(KernelFamily::Rbf, &p).unwrap().bandwidth > 0.0);
    }
}
