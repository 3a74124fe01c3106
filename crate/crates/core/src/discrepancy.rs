//! Kernel Stein discrepancies and maximum mean discrepancies between
//! empirical measures.
//!
//! All estimators are dense double sums. Rows are summed in ascending column
//! order and row totals in ascending row order, so the parallel and
//! sequential paths agree bitwise.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SvgdError};
use crate::exec::Exec;
use crate::kernels::KernelSpec;
use crate::particles::Particles;
use crate::targets::TargetModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Includes the diagonal terms; nonnegative.
    #[default]
    Vstat,
    /// Omits the diagonal terms; unbiased but may be negative.
    Ustat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub value: f64,
    pub estimator: Estimator,
    pub n_points: usize,
    pub kernel: KernelSpec,
    pub target: Option<String>,
    /// Estimated standard error, reported for the KSD U-statistic.
    pub std_err: Option<f64>,
}

fn require_smooth(kernel: &KernelSpec) -> Result<()> {
    kernel.validate()?;
    if !kernel.is_smooth() {
        return Err(SvgdError::UnsupportedKernel(
            kernel.family.name().into(),
            "Stein discrepancies need a twice differentiable kernel".into(),
        ));
    }
    Ok(())
}

fn require_finite(p: &Particles, what: &str) -> Result<()> {
    if p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} contain non-finite coordinates")))
    }
}

fn scores(target: &TargetModel, particles: &Particles, exec: Exec) -> Result<Particles> {
    if particles.dim() != target.dim() {
        return Err(SvgdError::DimensionMismatch { expected: target.dim(), got: particles.dim() });
    }
    let flat = exec.map(particles.len(), |i| target.metric_grad(particles.row(i))).concat();
    Particles::from_flat(particles.dim(), flat)
}

/// `Σ_i Σ_j f(i, j)` with a fixed summation order, optionally skipping the
/// diagonal. Returns the total and the per-row sums.
fn double_sum(
    exec: Exec,
    rows: usize,
    cols: usize,
    skip_diag: bool,
    f: impl Fn(usize, usize) -> f64 + Sync + Send,
) -> (f64, Vec<f64>) {
    let row_sums = exec.map(rows, |i| (0..cols).filter(|&j| !(skip_diag && i == j)).fold(0.0, |acc, j| acc + f(i, j)));
    (row_sums.iter().fold(0.0, |acc, v| acc + v), row_sums)
}

pub fn ksd2_to_target(
    particles: &Particles,
    target: &TargetModel,
    kernel: &KernelSpec,
    estimator: Estimator,
) -> Result<DiscrepancyReport> {
    ksd2_to_target_exec(particles, target, kernel, estimator, Exec::default())
}

pub fn ksd2_to_target_exec(
    particles: &Particles,
    target: &TargetModel,
    kernel: &KernelSpec,
    estimator: Estimator,
    exec: Exec,
) -> Result<DiscrepancyReport> {
    require_smooth(kernel)?;
    require_finite(particles, "particles")?;
    let s = scores(target, particles, exec)?;
    let mut report = ksd2_from_scores(particles, &s, kernel, estimator, exec)?;
    report.target = Some(target.name().to_string());
    Ok(report)
}

/// KSD² from particles and their precomputed scores `∇F(x_i)`.
///
/// The U-statistic comes with a standard error from the usual variance
/// decomposition, `4σ₁²/m + 2σ₂²/(m(m−1))`, where `σ₁²` is the variance of
/// the off-diagonal row means and `σ₂²` the mean squared kernel entry.
pub fn ksd2_from_scores(
    particles: &Particles,
    scores: &Particles,
    kernel: &KernelSpec,
    estimator: Estimator,
    exec: Exec,
) -> Result<DiscrepancyReport> {
    require_smooth(kernel)?;
    let m = particles.len();
    if scores.len() != m || scores.dim() != particles.dim() {
        return Err(SvgdError::DimensionMismatch { expected: m, got: scores.len() });
    }
    if m == 0 {
        return Err(invalid("KSD needs at least one particle"));
    }
    let u = |i: usize, j: usize| {
        kernel.stein_inner_unchecked(particles.row(i), scores.row(i), particles.row(j), scores.row(j))
    };
    let (value, std_err) = match estimator {
        Estimator::Vstat => {
            let (total, _) = double_sum(exec, m, m, false, u);
            (total / (m * m) as f64, None)
        }
        Estimator::Ustat => {
            if m < 2 {
                return Err(invalid("the U-statistic needs at least two particles"));
            }
            let (total, rows) = double_sum(exec, m, m, true, u);
            let (sq_total, _) = double_sum(exec, m, m, true, |i, j| u(i, j).powi(2));
            let mf = m as f64;
            let value = total / (mf * (mf - 1.0));
            let row_means: Vec<f64> = rows.iter().map(|r| r / (mf - 1.0)).collect();
            let sigma1 = row_means.iter().map(|r| (r - value).powi(2)).sum::<f64>() / (mf - 1.0);
            let sigma2 = sq_total / (mf * (mf - 1.0));
            (value, Some((4.0 * sigma1 / mf + 2.0 * sigma2 / (mf * (mf - 1.0))).sqrt()))
        }
    };
    Ok(DiscrepancyReport { value, estimator, n_points: m, kernel: *kernel, target: None, std_err })
}

/// `‖h_A − h_B‖²_H` between two empirical measures (V-statistic).
pub fn ksd2_between(
    a: &Particles,
    b: &Particles,
    target: &TargetModel,
    kernel: &KernelSpec,
) -> Result<DiscrepancyReport> {
    ksd2_between_exec(a, b, target, kernel, Exec::default())
}

pub fn ksd2_between_exec(
    a: &Particles,
    b: &Particles,
    target: &TargetModel,
    kernel: &KernelSpec,
    exec: Exec,
) -> Result<DiscrepancyReport> {
    require_smooth(kernel)?;
    if a.is_empty() || b.is_empty() {
        return Err(invalid("KSD between empirical measures needs nonempty sets"));
    }
    require_finite(a, "particles")?;
    require_finite(b, "particles")?;
    let sa = scores(target, a, exec)?;
    let sb = scores(target, b, exec)?;
    let cross = |p: &Particles, sp: &Particles, q: &Particles, sq: &Particles| {
        let (total, _) = double_sum(exec, p.len(), q.len(), false, |i, j| {
            kernel.stein_inner_unchecked(p.row(i), sp.row(i), q.row(j), sq.row(j))
        });
        total / (p.len() * q.len()) as f64
    };
    let value = cross(a, &sa, a, &sa) + cross(b, &sb, b, &sb) - 2.0 * cross(a, &sa, b, &sb);
    Ok(DiscrepancyReport {
        value,
        estimator: Estimator::Vstat,
        n_points: a.len() + b.len(),
        kernel: *kernel,
        target: Some(target.name().to_string()),
        std_err: None,
    })
}

pub fn mmd2(a: &Particles, b: &Particles, kernel: &KernelSpec, estimator: Estimator) -> Result<DiscrepancyReport> {
    mmd2_exec(a, b, kernel, estimator, Exec::default())
}

pub fn mmd2_exec(
    a: &Particles,
    b: &Particles,
    kernel: &KernelSpec,
    estimator: Estimator,
    exec: Exec,
) -> Result<DiscrepancyReport> {
    kernel.validate()?;
    check_mmd_inputs(a, b, estimator)?;
    let value = within_term(a, kernel, estimator, exec) + within_term(b, kernel, estimator, exec)
        - 2.0 * cross_term(a, b, kernel, exec);
    Ok(DiscrepancyReport {
        value,
        estimator,
        n_points: a.len() + b.len(),
        kernel: *kernel,
        target: None,
        std_err: None,
    })
}

fn check_mmd_inputs(a: &Particles, b: &Particles, estimator: Estimator) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(invalid("MMD needs nonempty particle sets"));
    }
    if a.dim() != b.dim() {
        return Err(SvgdError::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if estimator == Estimator::Ustat && (a.len() < 2 || b.len() < 2) {
        return Err(invalid("the U-statistic needs at least two points per set"));
    }
    require_finite(a, "particles")?;
    require_finite(b, "reference particles")
}

fn within_term(p: &Particles, kernel: &KernelSpec, estimator: Estimator, exec: Exec) -> f64 {
    let m = p.len();
    match estimator {
        Estimator::Vstat => double_sum(exec, m, m, false, |i, j| kernel.value(p.row(i), p.row(j))).0 / (m * m) as f64,
        Estimator::Ustat => {
            double_sum(exec, m, m, true, |i, j| kernel.value(p.row(i), p.row(j))).0 / (m * (m - 1)) as f64
        }
    }
}

fn cross_term(a: &Particles, b: &Particles, kernel: &KernelSpec, exec: Exec) -> f64 {
    double_sum(exec, a.len(), b.len(), false, |i, j| kernel.value(a.row(i), b.row(j))).0 / (a.len() * b.len()) as f64
}

/// A fixed reference sample for repeated MMD evaluations; the
/// reference-reference term is computed once.
#[derive(Debug, Clone, PartialEq)]
pub struct MmdReference {
    points: Particles,
    kernel: KernelSpec,
    estimator: Estimator,
    self_term: f64,
}

impl MmdReference {
    pub fn new(points: Particles, kernel: KernelSpec, estimator: Estimator, exec: Exec) -> Result<Self> {
        kernel.validate()?;
        require_finite(&points, "reference particles")?;
        let m = points.len();
        if m == 0 || (estimator == Estimator::Ustat && m < 2) {
            return Err(invalid("reference sample too small"));
        }
        let self_term = within_term(&points, &kernel, estimator, exec);
        Ok(Self { points, kernel, estimator, self_term })
    }

    pub fn points(&self) -> &Particles {
        &self.points
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Same value as [`mmd2_exec`] against the stored reference.
    pub fn mmd2(&self, a: &Particles, exec: Exec) -> Result<DiscrepancyReport> {
        check_mmd_inputs(a, &self.points, self.estimator)?;
        let value = within_term(a, &self.kernel, self.estimator, exec) + self.self_term
            - 2.0 * cross_term(a, &self.points, &self.kernel, exec);
        Ok(DiscrepancyReport {
            value,
            estimator: self.estimator,
            n_points: a.len() + self.points.len(),
            kernel: self.kernel,
            target: None,
            std_err: None,
        })
    }
}

/// `‖g‖_H` for the batch function `g = (1/K) Σ_b h(·, x_b)`.
pub fn rkhs_norm_g(batch: &Particles, target: &TargetModel, kernel: &KernelSpec) -> Result<f64> {
    require_smooth(kernel)?;
    require_finite(batch, "batch particles")?;
    let s = scores(target, batch, Exec::default())?;
    rkhs_norm_from_scores(batch, &s, kernel, Exec::default())
}

pub fn rkhs_norm_from_scores(batch: &Particles, scores: &Particles, kernel: &KernelSpec, exec: Exec) -> Result<f64> {
    if batch.is_empty() {
        return Err(invalid("empty batch"));
    }
    let v = ksd2_from_scores(batch, scores, kernel, Estimator::Vstat, exec)?.value;
    Ok(v.max(0.0).sqrt())
}
