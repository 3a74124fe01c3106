use thiserror::Error;

/// Errors produced by the sampling library.
#[derive(Debug, Error)]
pub enum SvgdError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("kernel `{0}` is not supported here: {1}")]
    UnsupportedKernel(String, String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step-size infeasible at step {step}: gamma * ||g_t||_H = {product:.6e} exceeds 1/(2B) = {bound:.6e}")]
    Infeasible { step: usize, product: f64, bound: f64 },

    #[error("run diverged at step {step}: particle {particle} has a non-finite coordinate")]
    Divergence { step: usize, particle: usize },

    #[error("recentering did not converge after {iters} iterations (last gradient norm {grad_norm:.6e}, target {target:.6e})")]
    Recenter { iters: usize, grad_norm: f64, target: f64 },

    #[error("gradient audit failed at probe {probe}: analytic {analytic:.10e} vs finite difference {numeric:.10e}")]
    GradientAudit { probe: usize, analytic: f64, numeric: f64 },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SvgdError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SvgdError {
    SvgdError::InvalidArgument(msg.into())
}
