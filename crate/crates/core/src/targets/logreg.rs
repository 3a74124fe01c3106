use std::sync::{Arc, RwLock};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SvgdError};
use crate::particles::{norm, Particles};

use super::{sample_ball_point, ConstantKind, Dataset, Growth, Potential, Smoothness, TargetModel};

/// `w | α ~ N(0, α⁻¹ I)`, `α ~ Gamma(shape, rate)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogregPrior {
    pub shape: f64,
    pub rate: f64,
}

impl Default for LogregPrior {
    fn default() -> Self {
        Self { shape: 1.0, rate: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregOptions {
    /// Fixed deterministic subset of training rows used by every gradient;
    /// `None` uses all training rows.
    pub subsample: Option<usize>,
    /// Draw a fresh random data batch of this size at every sampler step,
    /// with the likelihood rescaled to the subset size.
    pub per_step_batch: Option<usize>,
    pub seed: u64,
}

impl Default for LogregOptions {
    fn default() -> Self {
        Self { subsample: Some(50_000), per_step_batch: None, seed: 0 }
    }
}

/// Negative log posterior of Bayesian logistic regression in
/// `θ = [w, log α]`:
///
/// `F(θ) = Σ_i log(1 + exp(−y_i wᵀx_i)) + α‖w‖²/2 − (p/2) log α − a₀ log α + b₀ α`,
///
/// where the last two terms include the Jacobian of the log transform.
pub struct LogisticPotential {
    data: Arc<Dataset>,
    rows: Vec<usize>,
    prior: LogregPrior,
    batch: Option<(usize, u64)>,
    active: RwLock<Option<Arc<Vec<usize>>>>,
}

impl LogisticPotential {
    pub fn new(data: Arc<Dataset>, prior: LogregPrior, options: &LogregOptions) -> Result<Self> {
        if !(prior.shape > 0.0 && prior.rate > 0.0) {
            return Err(invalid("gamma prior needs positive shape and rate"));
        }
        let rows = match options.subsample {
            Some(size) => data.train_subsample(size, options.seed),
            None => data.train.clone(),
        };
        if let Some(b) = options.per_step_batch {
            if b == 0 {
                return Err(invalid("per-step batch size must be positive"));
            }
        }
        Ok(Self {
            data,
            rows,
            prior,
            batch: options.per_step_batch.map(|b| (b, options.seed)),
            active: RwLock::new(None),
        })
    }

    pub fn features(&self) -> usize {
        self.data.cols()
    }

    pub fn rows_used(&self) -> &[usize] {
        &self.rows
    }

    /// Validated gradient.
    pub fn checked_grad(&self, theta: &[f64]) -> Result<Vec<f64>> {
        if theta.len() != self.dim() {
            return Err(SvgdError::DimensionMismatch { expected: self.dim(), got: theta.len() });
        }
        let mut g = vec![0.0; theta.len()];
        self.grad_into(theta, &mut g);
        Ok(g)
    }

    fn with_rows<T>(&self, f: impl FnOnce(&[usize], f64) -> T) -> T {
        let active = self.active.read().expect("batch lock poisoned").clone();
        match active.as_deref() {
            Some(batch) => f(batch, self.rows.len() as f64 / batch.len() as f64),
            None => f(&self.rows, 1.0),
        }
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Potential for LogisticPotential {
    fn dim(&self) -> usize {
        self.data.cols() + 1
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let p = self.data.cols();
        let (w, log_alpha) = (&theta[..p], theta[p]);
        let alpha = log_alpha.exp();
        let lik = self.with_rows(|rows, scale| {
            scale
                * rows
                    .iter()
                    .map(|&i| {
                        let z: f64 = self.data.row(i).iter().zip(w).map(|(x, w)| x * w).sum();
                        softplus(-self.data.label(i) * z)
                    })
                    .sum::<f64>()
        });
        let w2: f64 = w.iter().map(|v| v * v).sum();
        lik + 0.5 * alpha * w2 - 0.5 * p as f64 * log_alpha - self.prior.shape * log_alpha + self.prior.rate * alpha
    }

    fn grad_into(&self, theta: &[f64], out: &mut [f64]) {
        let p = self.data.cols();
        let (w, log_alpha) = (&theta[..p], theta[p]);
        let alpha = log_alpha.exp();
        out.iter_mut().for_each(|o| *o = 0.0);
        self.with_rows(|rows, scale| {
            for &i in rows {
                let x = self.data.row(i);
                let y = self.data.label(i);
                let z: f64 = x.iter().zip(w).map(|(x, w)| x * w).sum();
                let c = -scale * y * sigmoid(-y * z);
                for (o, xj) in out[..p].iter_mut().zip(x) {
                    *o += c * xj;
                }
            }
        });
        let mut w2 = 0.0;
        for (o, wj) in out[..p].iter_mut().zip(w) {
            *o += alpha * wj;
            w2 += wj * wj;
        }
        out[p] = 0.5 * alpha * w2 - 0.5 * p as f64 - self.prior.shape + self.prior.rate * alpha;
    }

    fn begin_step(&self, step: usize) {
        if let Some((size, seed)) = self.batch {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (step as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            let size = size.min(self.rows.len());
            let mut picked: Vec<usize> =
                sample(&mut rng, self.rows.len(), size).into_iter().map(|k| self.rows[k]).collect();
            picked.sort_unstable();
            *self.active.write().expect("batch lock poisoned") = Some(Arc::new(picked));
        }
    }
}

/// Largest eigenvalue of `Σ_i x_i x_iᵀ` over `rows` by power iteration.
fn gram_top_eigenvalue(data: &Dataset, rows: &[usize]) -> f64 {
    let p = data.cols();
    let mut v = vec![1.0 / (p as f64).sqrt(); p];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut next = vec![0.0; p];
        for &i in rows {
            let x = data.row(i);
            let z: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (n, xj) in next.iter_mut().zip(x) {
                *n += z * xj;
            }
        }
        lambda = norm(&next);
        if lambda == 0.0 {
            break;
        }
        v = next.iter().map(|c| c / lambda).collect();
    }
    lambda
}

/// Bayesian logistic regression posterior over `θ = [w, log α]` (dimension
/// `features + 1`). `L` is the Hessian norm at `θ = 0`,
/// `max(¼ λ_max(XᵀX) + 1, b₀)`, flagged as an estimate; growth constants
/// (exponent 1) are fitted on probe points and flagged likewise.
pub fn bayes_logreg_target(data: Arc<Dataset>, prior: LogregPrior, options: &LogregOptions) -> Result<TargetModel> {
    let potential = LogisticPotential::new(data, prior, options)?;
    let l = (0.25 * gram_top_eigenvalue(&potential.data, &potential.rows) + 1.0).max(prior.rate);

    let dim = potential.dim();
    let p = potential.features() as f64;
    // Prior part in log α is bounded below by c − c·ln(c/b₀) with c = p/2 + a₀.
    let c = 0.5 * p + prior.shape;
    let d2 = (c * (c / prior.rate).ln() - c).max(0.0) + 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ 0x6770_7774);
    let mut ratio = f64::INFINITY;
    for _ in 0..64 {
        let x = sample_ball_point(dim, 20.0, &mut rng);
        let r = norm(&x);
        if r >= 1.0 {
            ratio = ratio.min((potential.value(&x) + d2) / r);
        }
    }
    let d1 = if ratio.is_finite() && ratio > 0.0 { 0.5 * ratio } else { 1e-9 };
    let growth = Growth { alpha: 1.0, d1, d2, kind: ConstantKind::Estimated };
    TargetModel::new("bayes_logreg", Box::new(potential), Smoothness { l, kind: ConstantKind::Estimated }, growth, 1.0)
}

/// Draws `n` parameter vectors from the prior: `α ~ Gamma(a₀, 1/b₀)`,
/// `w ~ N(0, α⁻¹ I)`, returned as `[w, log α]`.
pub fn sample_logreg_prior<R: Rng + ?Sized>(
    features: usize,
    prior: LogregPrior,
    n: usize,
    rng: &mut R,
) -> Result<Particles> {
    let gamma = Gamma::new(prior.shape, 1.0 / prior.rate).map_err(|e| invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(n * (features + 1));
    for _ in 0..n {
        let alpha: f64 = rng.sample(gamma).max(f64::MIN_POSITIVE);
        let sd = alpha.sqrt().recip();
        for _ in 0..features {
            let z: f64 = rng.sample(StandardNormal);
            data.push(sd * z);
        }
        data.push(alpha.ln());
    }
    Particles::from_flat(features + 1, data)
}

/// Fraction of `rows` classified correctly by the particle-averaged
/// predictive probability thresholded at 0.5.
pub fn predictive_accuracy(particles: &Particles, data: &Dataset, rows: &[usize]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let p = data.cols();
    let n = particles.len() as f64;
    let correct = rows
        .iter()
        .filter(|&&i| {
            let x = data.row(i);
            let prob =
                particles.rows().map(|theta| sigmoid(theta[..p].iter().zip(x).map(|(w, x)| w * x).sum())).sum::<f64>()
                    / n;
            let predicted = if prob >= 0.5 { 1.0 } else { -1.0 };
            predicted == data.label(i)
        })
        .count();
    correct as f64 / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(features: Vec<f64>, labels: Vec<f64>, cols: usize) -> Arc<Dataset> {
        let n = labels.len();
        Arc::new(Dataset::new(features, labels, cols, (0..n).collect(), vec![]).unwrap())
    }

    fn all_rows() -> LogregOptions {
        LogregOptions { subsample: None, per_step_batch: None, seed: 0 }
    }

    #[test]
    fn zero_data_reduces_to_prior() {
        let t = bayes_logreg_target(data(vec![], vec![], 3), LogregPrior::default(), &all_rows()).unwrap();
        assert_eq!(t.dim(), 4);
        let g = t.grad(&[0.0, 0.0, 0.0, 0.7]);
        assert_eq!(&g[..3], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn single_point_score() {
        let t = bayes_logreg_target(data(vec![1.0, 0.0], vec![1.0], 2), LogregPrior::default(), &all_rows()).unwrap();
        let g = t.grad(&[0.0, 0.0, 0.0]);
        assert_eq!(g[0], -0.5);
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = 6;
        let n = 100;
        let feats: Vec<f64> = (0..n * p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let labels: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let t = bayes_logreg_target(data(feats, labels, p), LogregPrior::default(), &all_rows()).unwrap();
        for _ in 0..20 {
            let theta = sample_ball_point(p + 1, 2.0, &mut rng);
            let g = t.grad(&theta);
            for j in 0..=p {
                let eps = 1e-6;
                let mut a = theta.clone();
                let mut b = theta.clone();
                a[j] += eps;
                b[j] -= eps;
                let fd = (t.value(&a) - t.value(&b)) / (2.0 * eps);
                assert!((g[j] - fd).abs() <= 1e-5 * g[j].abs().max(1.0), "coord {j}: {} vs {fd}", g[j]);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let pot =
            LogisticPotential::new(data(vec![1.0, 2.0], vec![1.0], 2), LogregPrior::default(), &all_rows()).unwrap();
        assert!(matches!(pot.checked_grad(&[0.0, 0.0]), Err(SvgdError::DimensionMismatch { expected: 3, got: 2 })));
    }

    #[test]
    fn every_gradient_is_one_oracle_call() {
        let t = bayes_logreg_target(data(vec![1.0, 2.0], vec![1.0], 2), LogregPrior::default(), &all_rows()).unwrap();
        for _ in 0..5 {
            t.grad(&[0.1, 0.2, 0.0]);
        }
        assert_eq!(t.oracle_calls(), 5);
    }

    #[test]
    fn per_step_batches_are_deterministic() {
        let d = data((0..40).map(|v| v as f64 / 40.0).collect(), vec![1.0; 20], 2);
        let opts = LogregOptions { subsample: None, per_step_batch: Some(5), seed: 9 };
        let a = LogisticPotential::new(d.clone(), LogregPrior::default(), &opts).unwrap();
        let b = LogisticPotential::new(d, LogregPrior::default(), &opts).unwrap();
        a.begin_step(3);
        b.begin_step(3);
        let theta = [0.3, -0.2, 0.1];
        assert_eq!(a.value(&theta), b.value(&theta));
        b.begin_step(4);
        assert_ne!(a.value(&theta), b.value(&theta));
    }

    #[test]
    fn prior_samples_and_accuracy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ps = sample_logreg_prior(2, LogregPrior::default(), 50, &mut rng).unwrap();
        assert_eq!(ps.dim(), 3);
        assert!(ps.is_finite());
        let d = Dataset::new(vec![1.0, 0.0, -1.0, 0.0], vec![1.0, -1.0], 2, vec![], vec![0, 1]).unwrap();
        let perfect = Particles::from_rows(&[vec![5.0, 0.0, 0.0]]).unwrap();
        assert_eq!(predictive_accuracy(&perfect, &d, &d.test), 1.0);
        let wrong = Particles::from_rows(&[vec![-5.0, 0.0, 0.0]]).unwrap();
        assert_eq!(predictive_accuracy(&wrong, &d, &d.test), 0.0);
    }
}
