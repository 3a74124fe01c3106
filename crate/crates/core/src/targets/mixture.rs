use crate::error::{invalid, Result};
use crate::particles::norm;

use super::{estimate_smoothness, ConstantKind, Growth, Potential, Smoothness, TargetModel};

/// `F(x) = −log Σ_j w_j exp(−q_j(x))` with `q_j(x) = Σ_i (x_i − μ_ji)²/(2σ_i²)`.
/// The shared Gaussian normalizer is absorbed into `F(0)`.
#[derive(Debug, Clone)]
pub struct MixturePotential {
    log_weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    precision: Vec<f64>,
}

impl MixturePotential {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, shared_diag_cov: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || means.is_empty() {
            return Err(invalid("mixture needs at least one component"));
        }
        if weights.len() != means.len() {
            return Err(invalid(format!("{} weights for {} means", weights.len(), means.len())));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(invalid("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("mixture weights sum to {total}, expected 1")));
        }
        let d = shared_diag_cov.len();
        if d == 0 || means.iter().any(|m| m.len() != d) {
            return Err(invalid("component means must match the covariance dimension"));
        }
        if shared_diag_cov.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("variances must be positive"));
        }
        Ok(Self {
            log_weights: weights.iter().map(|w| w.ln()).collect(),
            means,
            precision: shared_diag_cov.iter().map(|v| 1.0 / v).collect(),
        })
    }

    fn quad(&self, j: usize, x: &[f64]) -> f64 {
        x.iter().zip(&self.means[j]).zip(&self.precision).map(|((xi, mi), pi)| 0.5 * pi * (xi - mi) * (xi - mi)).sum()
    }

    /// Exponents `log w_j − q_j(x)` and their maximum.
    fn exponents(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let a: Vec<f64> = (0..self.means.len()).map(|j| self.log_weights[j] - self.quad(j, x)).collect();
        let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (a, max)
    }
}

impl Potential for MixturePotential {
    fn dim(&self) -> usize {
        self.precision.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (a, max) = self.exponents(x);
        let s: f64 = a.iter().map(|v| (v - max).exp()).sum();
        -(max + s.ln())
    }

    fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let (a, max) = self.exponents(x);
        let resp: Vec<f64> = a.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = resp.iter().sum();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, r) in resp.iter().enumerate() {
            let r = r / total;
            for (i, o) in out.iter_mut().enumerate() {
                *o += r * (self.precision[i] * (x[i] - self.means[j][i]));
            }
        }
    }
}

/// Mixture of Gaussians sharing a diagonal covariance. `L` is estimated by
/// power iteration on finite-difference Hessians and flagged as estimated.
pub fn mixture_target(weights: Vec<f64>, means: Vec<Vec<f64>>, shared_diag_cov: Vec<f64>) -> Result<TargetModel> {
    let potential = MixturePotential::new(weights, means, shared_diag_cov)?;
    let d = potential.dim();
    let lambda_max = potential.precision.iter().copied().fold(0.0, f64::max);
    let lambda_min = potential.precision.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mean = potential.means.iter().map(|m| norm(m)).fold(0.0, f64::max);
    let radius = max_mean + 3.0 * (d as f64 / lambda_min).sqrt();
    let l = estimate_smoothness(&potential, radius, 64, 0xacce55).max(lambda_max);
    // F ≥ min_j q_j and q_j(x) ≥ λ_min(‖x‖²/2 − ‖μ_j‖²)/2.
    let growth = Growth {
        alpha: 2.0,
        d1: lambda_min / 4.0,
        d2: lambda_min * max_mean * max_mean / 2.0,
        kind: ConstantKind::Analytic,
    };
    TargetModel::new("mixture", Box::new(potential), Smoothness { l, kind: ConstantKind::Estimated }, growth, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::{gaussian_target, recenter, sample_ball_point};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_component_matches_gaussian() {
        let mean = vec![0.5, -1.0, 2.0];
        let cov = vec![1.0, 0.5, 3.0];
        let mix = mixture_target(vec![1.0], vec![mean.clone()], cov.clone()).unwrap();
        let gauss = gaussian_target(mean, cov).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x = sample_ball_point(3, 6.0, &mut rng);
            assert!((mix.value(&x) - gauss.value(&x)).abs() <= 1e-12);
            let gm = mix.grad(&x);
            let gg = gauss.grad(&x);
            for (a, b) in gm.iter().zip(&gg) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_mixture_stationary_at_origin() {
        let mix = mixture_target(vec![0.5, 0.5], vec![vec![2.0, 1.0], vec![-2.0, -1.0]], vec![1.0, 1.0]).unwrap();
        let g = mix.grad(&[0.0, 0.0]);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
        let centered = recenter(mix, 10).unwrap();
        assert_eq!(centered.center_shift(), &[0.0, 0.0]);
    }

    #[test]
    fn one_dimensional_gradient_matches_finite_difference() {
        let mix = mixture_target(vec![0.5, 0.5], vec![vec![2.0], vec![-2.0]], vec![1.0]).unwrap();
        // Independent oracle: −log of the explicit density, differenced numerically.
        let f =
            |x: f64| -(0.5 * (-(x - 2.0) * (x - 2.0) / 2.0).exp() + 0.5 * (-(x + 2.0) * (x + 2.0) / 2.0).exp()).ln();
        let eps = 1e-6;
        let fd = (f(2.0 + eps) - f(2.0 - eps)) / (2.0 * eps);
        let g = mix.grad(&[2.0])[0];
        assert!((g - fd).abs() <= 1e-5 * fd.abs(), "{g} vs {fd}");
        // 4 · e^{-8} / (1 + e^{-8}) from the responsibility of the far component.
        assert!((g - 4.0 * (-8f64).exp() / (1.0 + (-8f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn empty_mixture_rejected() {
        assert!(mixture_target(vec![], vec![], vec![1.0]).is_err());
        assert!(mixture_target(vec![0.3, 0.3], vec![vec![0.0], vec![1.0]], vec![1.0]).is_err());
    }

    #[test]
    fn smoothness_is_estimated_and_at_least_precision() {
        let mix = mixture_target(vec![0.5, 0.5], vec![vec![3.0], vec![-3.0]], vec![1.0]).unwrap();
        let s = mix.smoothness();
        assert_eq!(s.kind, ConstantKind::Estimated);
        // The Hessian at the origin is 1 − 9 = −8 for this mixture.
        assert!(s.l >= 7.9, "{}", s.l);
        assert!(mix.growth_audit(50.0, 10_000, 3).is_none());
    }
}
