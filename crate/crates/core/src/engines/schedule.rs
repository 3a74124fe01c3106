//! Step-size rules.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SvgdError};
use crate::kernels::KernelConstants;
use crate::targets::{ConstantKind, TargetModel};

use super::{Algorithm, RunConfig};

/// Requested step-size rule, as it appears in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant {
        gamma: f64,
    },
    /// `γ = min{ c (Kd)^η / T^(1−η), 1/(2 A1 L), 1/((4+L) B) }` with
    /// `η = α / (2(1+α))`.
    Theory {
        c: f64,
    },
    /// Per-coordinate AdaGrad with momentum on the squared update direction.
    AdagradMomentum {
        #[serde(default = "default_base")]
        base: f64,
        #[serde(default = "default_momentum")]
        momentum: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_base() -> f64 {
    0.05
}

fn default_momentum() -> f64 {
    0.9
}

fn default_epsilon() -> f64 {
    1e-6
}

impl ScheduleKind {
    pub fn adagrad_default() -> Self {
        ScheduleKind::AdagradMomentum { base: default_base(), momentum: default_momentum(), epsilon: default_epsilon() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ScheduleKind::Constant { gamma } => gamma.is_finite() && gamma >= 0.0,
            ScheduleKind::Theory { c } => c.is_finite() && c > 0.0,
            ScheduleKind::AdagradMomentum { base, momentum, epsilon } => {
                base.is_finite() && base > 0.0 && (0.0..1.0).contains(&momentum) && epsilon > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SvgdError::Config(format!("invalid step-size schedule {self:?}")))
        }
    }
}

/// Which term of the theory step size is the smallest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    Rate,
    SmoothnessCap,
    NormCap,
}

/// A resolved step-size rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant {
        gamma: f64,
    },
    Theory {
        gamma: f64,
        eta: f64,
        rate: f64,
        smoothness_cap: f64,
        norm_cap: f64,
        binding: Binding,
        /// 1/(2B), the bound enforced on `γ ‖g_t‖_H` at every step.
        feasibility_bound: f64,
        /// True when `L` or the kernel constants are numerical estimates.
        estimated: bool,
    },
    AdagradMomentum {
        base: f64,
        momentum: f64,
        epsilon: f64,
    },
}

impl StepSchedule {
    /// The nominal step size: `γ` for constant rules, the base rate for
    /// AdaGrad.
    pub fn gamma(&self) -> f64 {
        match *self {
            StepSchedule::Constant { gamma } | StepSchedule::Theory { gamma, .. } => gamma,
            StepSchedule::AdagradMomentum { base, .. } => base,
        }
    }

    pub fn feasibility_bound(&self) -> Option<f64> {
        match *self {
            StepSchedule::Theory { feasibility_bound, .. } => Some(feasibility_bound),
            _ => None,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, StepSchedule::AdagradMomentum { .. })
    }
}

/// `η = α / (2(1 + α))`.
pub fn theory_eta(alpha: f64) -> f64 {
    alpha / (2.0 * (1.0 + alpha))
}

/// The two explicit step-size caps `(1/(2 A1 L), 1/((4+L) B))`.
pub fn step_caps(l: f64, constants: &KernelConstants) -> (f64, f64) {
    let smooth = if l > 0.0 { 1.0 / (2.0 * constants.a1 * l) } else { f64::INFINITY };
    (smooth, 1.0 / ((4.0 + l) * constants.b))
}

pub fn make_schedule(
    kind: &ScheduleKind,
    target: &TargetModel,
    constants: Option<&KernelConstants>,
    config: &RunConfig,
) -> Result<StepSchedule> {
    kind.validate()?;
    match *kind {
        ScheduleKind::Constant { gamma } => Ok(StepSchedule::Constant { gamma }),
        ScheduleKind::AdagradMomentum { base, momentum, epsilon } => {
            Ok(StepSchedule::AdagradMomentum { base, momentum, epsilon })
        }
        ScheduleKind::Theory { c } => {
            let constants =
                constants.ok_or_else(|| SvgdError::Config("theory step size needs kernel constants (B, A1)".into()))?;
            let l = target.smoothness().l;
            let alpha = target.growth().alpha;
            let eta = theory_eta(alpha);
            let k = match config.algorithm {
                Algorithm::Svgd => config.n,
                _ => config.k,
            } as f64;
            let d = target.dim() as f64;
            let rate = c * (k * d).powf(eta) / (config.t as f64).powf(1.0 - eta);
            let (smoothness_cap, norm_cap) = step_caps(l, constants);
            let (gamma, binding) =
                [(rate, Binding::Rate), (smoothness_cap, Binding::SmoothnessCap), (norm_cap, Binding::NormCap)]
                    .into_iter()
                    .fold((f64::INFINITY, Binding::Rate), |best, cand| if cand.0 < best.0 { cand } else { best });
            let estimated = target.smoothness().kind == ConstantKind::Estimated
                || constants.source != crate::kernels::ConstantSource::Analytic;
            Ok(StepSchedule::Theory {
                gamma,
                eta,
                rate,
                smoothness_cap,
                norm_cap,
                binding,
                feasibility_bound: 1.0 / (2.0 * constants.b),
                estimated,
            })
        }
    }
}

/// Running state of a schedule during a run.
#[derive(Debug, Clone)]
pub(crate) struct ScheduleState {
    schedule: StepSchedule,
    history: Vec<f64>,
    started: bool,
}

impl ScheduleState {
    pub(crate) fn new(schedule: StepSchedule) -> Self {
        Self { schedule, history: Vec::new(), started: false }
    }

    /// Moves `positions` along `−direction` and returns the step size recorded
    /// for this step.
    pub(crate) fn apply(&mut self, positions: &mut [f64], direction: &[f64]) -> f64 {
        match self.schedule {
            StepSchedule::Constant { gamma } | StepSchedule::Theory { gamma, .. } => {
                for (x, phi) in positions.iter_mut().zip(direction) {
                    *x -= gamma * phi;
                }
                gamma
            }
            StepSchedule::AdagradMomentum { base, momentum, epsilon } => {
                if !self.started {
                    self.history = direction.iter().map(|p| p * p).collect();
                    self.started = true;
                } else {
                    for (h, p) in self.history.iter_mut().zip(direction) {
                        *h = momentum * *h + (1.0 - momentum) * p * p;
                    }
                }
                for ((x, phi), h) in positions.iter_mut().zip(direction).zip(&self.history) {
                    *x -= base * phi / (epsilon + h.sqrt());
                }
                base
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engines::{OutputTime, Sampling};
    use crate::kernels::KernelSpec;
    use crate::targets::gaussian_target;

    fn config(t: usize) -> RunConfig {
        RunConfig {
            algorithm: Algorithm::Vp,
            n: 10,
            k: 2,
            t,
            schedule: ScheduleKind::Theory { c: 0.01 },
            sampling: Sampling::WithoutReplacement,
            output_time: OutputTime::RandomS,
            seed: 1,
        }
    }

    #[test]
    fn eta_values() {
        assert_eq!(theory_eta(2.0), 1.0 / 3.0);
        assert_eq!(theory_eta(1.0), 0.25);
    }

    #[test]
    fn theory_rate_below_caps() {
        let target = gaussian_target(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let kc = KernelSpec::rbf(1.0).analytic_constants(2).unwrap();
        let s = make_schedule(&ScheduleKind::Theory { c: 0.01 }, &target, Some(&kc), &config(1000)).unwrap();
        let expected = 0.01 * 4f64.powf(1.0 / 3.0) / 1000f64.powf(2.0 / 3.0);
        match s {
            StepSchedule::Theory { gamma, binding, .. } => {
                assert!((gamma - expected).abs() <= 1e-15 * expected);
                assert_eq!(binding, Binding::Rate);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn large_c_returns_cap_exactly() {
        let target = gaussian_target(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let kc = KernelSpec::rbf(1.0).analytic_constants(2).unwrap();
        let s = make_schedule(&ScheduleKind::Theory { c: 1e9 }, &target, Some(&kc), &config(10)).unwrap();
        let (a, b) = step_caps(1.0, &kc);
        assert_eq!(s.gamma(), a.min(b));
        assert_eq!(s.gamma(), 1.0 / (5.0 * 2f64.sqrt()));
    }

    #[test]
    fn theory_without_constants_is_config_error() {
        let target = gaussian_target(vec![0.0; 2], vec![1.0; 2]).unwrap();
        let err = make_schedule(&ScheduleKind::Theory { c: 1.0 }, &target, None, &config(10)).unwrap_err();
        assert!(matches!(err, SvgdError::Config(_)));
    }

    #[test]
    fn adagrad_first_step_normalizes() {
        let mut st = ScheduleState::new(StepSchedule::AdagradMomentum { base: 0.1, momentum: 0.9, epsilon: 0.0 });
        let mut x = vec![0.0, 0.0];
        st.apply(&mut x, &[2.0, -0.5]);
        assert_eq!(x, vec![-0.1, 0.1]);
        st.apply(&mut x, &[2.0, 0.0]);
        assert!((x[0] + 0.2).abs() < 1e-15);
        assert_eq!(x[1], 0.1);
    }
}
