use crate::error::{invalid, Result};
use crate::particles::norm;

use super::{init_radius, ConstantKind, Growth, Potential, Smoothness, TargetModel};

/// `F(x) = Σ (x_i − m_i)² / (2σ_i²)`, normalizing constant absorbed into `F(0)`.
#[derive(Debug, Clone)]
pub struct GaussianPotential {
    mean: Vec<f64>,
    precision: Vec<f64>,
}

impl GaussianPotential {
    pub fn new(mean: Vec<f64>, diag_cov: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(invalid("gaussian target needs dimension >= 1"));
        }
        if mean.len() != diag_cov.len() {
            return Err(invalid(format!("mean has {} entries but covariance has {}", mean.len(), diag_cov.len())));
        }
        if let Some(v) = diag_cov.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid(format!("variances must be positive, got {v}")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(invalid("mean must be finite"));
        }
        let precision = diag_cov.iter().map(|v| 1.0 / v).collect();
        Ok(Self { mean, precision })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn precision(&self) -> &[f64] {
        &self.precision
    }
}

impl Potential for GaussianPotential {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.mean).zip(&self.precision).map(|((xi, mi), pi)| 0.5 * pi * (xi - mi) * (xi - mi)).sum()
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, xi), mi), pi) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.precision) {
            *o = pi * (xi - mi);
        }
    }
}

/// Gaussian target with diagonal covariance. `L` is the largest precision
/// and the growth constants follow from `‖x − m‖² ≥ ‖x‖²/2 − ‖m‖²`.
pub fn gaussian_target(mean: Vec<f64>, diag_cov: Vec<f64>) -> Result<TargetModel> {
    let potential = GaussianPotential::new(mean, diag_cov)?;
    let l = potential.precision.iter().copied().fold(0.0, f64::max);
    let lambda_min = potential.precision.iter().copied().fold(f64::INFINITY, f64::min);
    let m2 = norm(&potential.mean).powi(2);
    let growth = Growth { alpha: 2.0, d1: lambda_min / 4.0, d2: lambda_min * m2 / 2.0, kind: ConstantKind::Analytic };
    let dim = potential.dim();
    let radius = init_radius(dim, l) * 3.0 + norm(&potential.mean);
    TargetModel::new("gaussian", Box::new(potential), Smoothness { l, kind: ConstantKind::Analytic }, growth, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::recenter;

    #[test]
    fn standard_normal_score() {
        let t = gaussian_target(vec![0.0; 5], vec![1.0; 5]).unwrap();
        assert_eq!(t.grad(&[0.0; 5]), vec![0.0; 5]);
        let t2 = gaussian_target(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(t2.grad(&[2.0, 0.0]), vec![2.0, 0.0]);
        let t3 = gaussian_target(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(t3.grad(&[1.0, 1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_covariance() {
        assert!(gaussian_target(vec![0.0], vec![0.0]).is_err());
        assert!(gaussian_target(vec![0.0], vec![-1.0]).is_err());
        assert!(gaussian_target(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn constants() {
        let t = gaussian_target(vec![0.0; 3], vec![0.5, 1.0, 2.0]).unwrap();
        assert_eq!(t.smoothness().l, 2.0);
        assert_eq!(t.growth().alpha, 2.0);
    }

    #[test]
    fn oracle_counter_counts_every_call() {
        let t = gaussian_target(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(t.oracle_calls(), 0);
        for i in 0..17 {
            t.grad(&[i as f64, 0.0]);
        }
        t.metric_grad(&[0.0, 0.0]);
        assert_eq!(t.oracle_calls(), 17);
        assert_eq!(t.metric_grad_evals(), 1);
    }

    #[test]
    fn recenter_standard_is_noop() {
        let t = recenter(gaussian_target(vec![0.0; 3], vec![1.0; 3]).unwrap(), 10).unwrap();
        assert_eq!(t.center_shift(), &[0.0; 3]);
    }

    #[test]
    fn recenter_shifted_mean() {
        let t = recenter(gaussian_target(vec![10.0; 4], vec![1.0; 4]).unwrap(), 100).unwrap();
        for s in t.center_shift() {
            assert!((s - 10.0).abs() <= 1e-6);
        }
        assert!(norm(&t.grad(&[0.0; 4])) <= t.smoothness().l.sqrt() + 1e-9);
        let again = recenter(t, 100).unwrap();
        for s in again.center_shift() {
            assert!((s - 10.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn recenter_reports_failure() {
        let t = gaussian_target(vec![10.0; 2], vec![1.0, 100.0]).unwrap();
        assert!(matches!(recenter(t, 0), Err(crate::SvgdError::Recenter { .. })));
    }

    #[test]
    fn growth_audit_holds() {
        let t = gaussian_target(vec![3.0, -2.0, 0.5], vec![1.0, 0.25, 4.0]).unwrap();
        assert!(t.growth_audit(50.0, 10_000, 11).is_none());
    }
}
