//! Stein variational gradient descent and its random-batch variants.
//!
//! The crate provides three samplers over particle ensembles:
//!
//! * full SVGD, where every particle interacts with every other particle,
//! * virtual-particle SVGD (VP-SVGD), where `KT` virtual particles drive `n`
//!   real particles through disjoint per-step batches,
//! * global-batch SVGD (GB-SVGD), where one random batch of `K` of the `n`
//!   particles drives the whole ensemble each step.
//!
//! Kernels use the convention `k(x, y) = exp(−‖x − y‖² / (2h))` for the RBF
//! family, so `h` is a squared bandwidth. Kernel Stein discrepancies are
//! computed in closed form from Stein inner products, and the
//! [`verification`] module checks the structural properties of the samplers
//! mechanically.

// `!(x > 0.0)` style guards deliberately reject NaN along with the bound.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrepancy;
pub mod engines;
pub mod error;
pub mod exec;
pub mod kernels;
pub mod particles;
pub mod targets;
pub mod verification;

pub use error::{Result, SvgdError};
pub use exec::Exec;
pub use kernels::{KernelConstants, KernelFamily, KernelSpec};
pub use particles::{ParticleEnsemble, Particles, Role};
pub use targets::TargetModel;
