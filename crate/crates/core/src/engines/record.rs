//! Per-run traces.

use serde::{Deserialize, Serialize};

use crate::kernels::KernelSpec;

use super::schedule::StepSchedule;
use super::RunConfig;

/// State `x_t` and the update that leaves it. The update fields are `None`
/// on the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub gamma: Option<f64>,
    pub batch: Vec<usize>,
    /// `‖g_t‖_H` of the batch function driving this update.
    pub g_norm: Option<f64>,
    /// `Σ_b ‖x_b‖` over the batch, for the surrogate bound on `‖g_t‖_H`.
    pub batch_norm_sum: Option<f64>,
    /// Largest norm among the output-candidate particles at `x_t`.
    pub max_particle_norm: f64,
    pub ksd2: Option<f64>,
    pub mmd2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub target: String,
    pub dim: usize,
    pub kernel: KernelSpec,
    pub schedule: StepSchedule,
    pub exec: String,
    pub steps: Vec<StepRecord>,
    /// `F` at every particle of the ensemble, one row per state `x_t`.
    pub potential_trace: Option<Vec<Vec<f64>>>,
    /// Gradient evaluations actually performed by the sampler.
    pub distinct_grad_evals: u64,
    /// Gradient uses counted per particle update.
    pub paper_convention_grad_evals: u64,
    pub metric_grad_evals: u64,
    pub wall_time_secs: f64,
    pub seed: u64,
    /// Output time; equals `T` when outputs are taken at the final step.
    pub chosen_s: usize,
}

impl RunRecord {
    /// Copy with the wall-clock field cleared, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_secs: 0.0, ..self.clone() }
    }

    pub fn csv_header() -> &'static str {
        "step,gamma,g_norm,max_particle_norm,ksd2,mmd2"
    }

    /// Per-step rows matching [`RunRecord::csv_header`], with missing values
    /// left empty.
    pub fn csv_rows(&self) -> Vec<[String; 6]> {
        fn opt(v: Option<f64>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        self.steps
            .iter()
            .map(|s| {
                [
                    s.step.to_string(),
                    opt(s.gamma),
                    opt(s.g_norm),
                    s.max_particle_norm.to_string(),
                    opt(s.ksd2),
                    opt(s.mmd2),
                ]
            })
            .collect()
    }
}
