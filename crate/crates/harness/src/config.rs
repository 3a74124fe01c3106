//! Experiment configuration files.
//!
//! Configs are JSON objects with a mandatory `schema_version`. A minimal
//! Gaussian experiment:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "gaussian_gb",
//!   "target": { "kind": "gaussian", "dim": 5 },
//!   "kernel": { "family": "laplace", "bandwidth": 1.0 },
//!   "run": {
//!     "algorithm": "gb", "n": 100, "k": 10, "t": 500,
//!     "schedule": { "kind": "constant", "gamma": 0.05 },
//!     "seed": 0
//!   },
//!   "metrics": { "cadence": 1, "mmd": { "reference_size": 1000 } },
//!   "repetitions": 10
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use svgd_core::discrepancy::Estimator;
use svgd_core::engines::RunConfig;
use svgd_core::targets::{
    bayes_logreg_target, gaussian_target, load_covertype, mixture_target, CovertypeOptions, Dataset, LogregOptions,
    LogregPrior, COVERTYPE_ROWS,
};
use svgd_core::{KernelSpec, Particles, TargetModel};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub target: TargetSpec,
    pub kernel: KernelSpec,
    pub run: RunConfig,
    #[serde(default)]
    pub metrics: MetricsSpec,
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    /// Diagonal Gaussian; mean defaults to 0 and variances to 1.
    Gaussian {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance: Option<Vec<f64>>,
    },
    Mixture {
        weights: Vec<f64>,
        means: Vec<Vec<f64>>,
        variance: Vec<f64>,
    },
    /// Bayesian logistic regression on the Covertype file.
    Covertype(CovertypeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovertypeSpec {
    pub data: PathBuf,
    /// Training rows used by the likelihood; ignored with `full_data`.
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default)]
    pub full_data: bool,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_step_batch: Option<usize>,
    /// Require exactly the row count of the UCI release.
    #[serde(default)]
    pub check_row_count: bool,
    #[serde(default = "default_prior")]
    pub prior: LogregPrior,
}

fn default_subsample() -> usize {
    50_000
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_prior() -> LogregPrior {
    LogregPrior::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSpec {
    #[serde(default = "one")]
    pub cadence: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ksd: Option<KsdSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmd: Option<MmdSpec>,
}

impl Default for MetricsSpec {
    fn default() -> Self {
        Self { cadence: 1, ksd: None, mmd: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsdSpec {
    #[serde(default = "rbf_one")]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub estimator: Estimator,
}

fn rbf_one() -> KernelSpec {
    KernelSpec::rbf(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MmdSpec {
    #[serde(default = "default_reference_size")]
    pub reference_size: usize,
    /// Defaults to the sampler kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub estimator: Estimator,
}

fn default_reference_size() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_gamma_grid")]
    pub gammas: Vec<f64>,
}

/// Seven log-spaced step sizes from 1e-3 to 1.
pub fn default_gamma_grid() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(format!("malformed JSON: {e}")))?;
        match value.get("schema_version") {
            None => return Err(HarnessError::Config("missing required field `schema_version`".into())),
            Some(v) if v.as_u64() != Some(SCHEMA_VERSION as u64) => {
                return Err(HarnessError::Config(format!(
                    "unsupported `schema_version` {v}, expected {SCHEMA_VERSION}"
                )))
            }
            Some(_) => {}
        }
        let config: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: String| Err(HarnessError::Config(format!("`{name}`: {msg}")));
        if self.repetitions == 0 {
            return field("repetitions", "must be at least 1".into());
        }
        if self.metrics.cadence == 0 {
            return field("metrics.cadence", "must be at least 1".into());
        }
        if let Some(m) = &self.metrics.mmd {
            if m.reference_size == 0 {
                return field("metrics.mmd.reference_size", "must be at least 1".into());
            }
            if matches!(self.target, TargetSpec::Covertype(_)) {
                return field("metrics.mmd", "no reference sampler exists for the covertype posterior".into());
            }
        }
        if let Some(k) = &self.metrics.ksd {
            k.kernel.validate().map_err(|e| HarnessError::Config(format!("`metrics.ksd.kernel`: {e}")))?;
            if !k.kernel.is_smooth() {
                return field("metrics.ksd.kernel", "KSD needs a twice differentiable kernel".into());
            }
        }
        if let Some(s) = &self.sweep {
            if s.gammas.is_empty() || s.gammas.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
                return field("sweep.gammas", "must be a non-empty list of positive step sizes".into());
            }
        }
        self.kernel.validate().map_err(|e| HarnessError::Config(format!("`kernel`: {e}")))?;
        self.run.validate().map_err(|e| HarnessError::Config(format!("`run`: {e}")))?;
        match &self.target {
            TargetSpec::Gaussian { dim, mean, variance } => {
                if *dim == 0 {
                    return field("target.dim", "must be at least 1".into());
                }
                if mean.as_ref().is_some_and(|m| m.len() != *dim) {
                    return field("target.mean", format!("length must equal dim = {dim}"));
                }
                if variance.as_ref().is_some_and(|v| v.len() != *dim) {
                    return field("target.variance", format!("length must equal dim = {dim}"));
                }
            }
            TargetSpec::Mixture { .. } => {}
            TargetSpec::Covertype(c) => {
                if !c.data.is_file() {
                    return field("target.data", format!("dataset file {} does not exist", c.data.display()));
                }
                if !(c.train_fraction > 0.0 && c.train_fraction < 1.0) {
                    return field("target.train_fraction", "must lie strictly between 0 and 1".into());
                }
            }
        }
        Ok(())
    }
}

/// A constructed target and, for Covertype, the dataset behind it.
pub struct BuiltTarget {
    pub model: TargetModel,
    pub dataset: Option<Arc<Dataset>>,
}

impl TargetSpec {
    pub fn build(&self, seed: u64) -> Result<BuiltTarget> {
        match self {
            TargetSpec::Gaussian { dim, mean, variance } => {
                let mean = mean.clone().unwrap_or_else(|| vec![0.0; *dim]);
                let variance = variance.clone().unwrap_or_else(|| vec![1.0; *dim]);
                Ok(BuiltTarget { model: gaussian_target(mean, variance)?, dataset: None })
            }
            TargetSpec::Mixture { weights, means, variance } => Ok(BuiltTarget {
                model: mixture_target(weights.clone(), means.clone(), variance.clone())?,
                dataset: None,
            }),
            TargetSpec::Covertype(c) => {
                let options = CovertypeOptions {
                    seed,
                    train_fraction: c.train_fraction,
                    expected_rows: c.check_row_count.then_some(COVERTYPE_ROWS),
                };
                let data = Arc::new(load_covertype(&c.data, &options)?);
                let logreg = LogregOptions {
                    subsample: (!c.full_data).then_some(c.subsample),
                    per_step_batch: c.per_step_batch,
                    seed,
                };
                let model = bayes_logreg_target(Arc::clone(&data), c.prior, &logreg)?;
                Ok(BuiltTarget { model, dataset: Some(data) })
            }
        }
    }

    /// `m` i.i.d. draws from the target, when it can be sampled exactly.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Result<Particles> {
        let gauss = |mean: &[f64], var: &[f64], rng: &mut R, out: &mut Vec<f64>| {
            for (mu, v) in mean.iter().zip(var) {
                let z: f64 = rng.sample(StandardNormal);
                out.push(mu + v.sqrt() * z);
            }
        };
        let mut data = Vec::new();
        let dim = match self {
            TargetSpec::Gaussian { dim, mean, variance } => {
                let mean = mean.clone().unwrap_or_else(|| vec![0.0; *dim]);
                let variance = variance.clone().unwrap_or_else(|| vec![1.0; *dim]);
                for _ in 0..m {
                    gauss(&mean, &variance, rng, &mut data);
                }
                *dim
            }
            TargetSpec::Mixture { weights, means, variance } => {
                for _ in 0..m {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let j = weights
                        .iter()
                        .position(|w| {
                            acc += w;
                            u < acc
                        })
                        .unwrap_or(weights.len() - 1);
                    gauss(&means[j], variance, rng, &mut data);
                }
                variance.len()
            }
            TargetSpec::Covertype(_) => {
                return Err(HarnessError::Config("the covertype posterior cannot be sampled exactly".into()))
            }
        };
        Ok(Particles::from_flat(dim, data)?)
    }
}

impl MetricsSpec {
    pub fn ksd_plan(&self) -> Option<(KernelSpec, Estimator)> {
        self.ksd.as_ref().map(|k| (k.kernel, k.estimator))
    }
}
