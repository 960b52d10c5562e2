//! Learning-centric uplink power allocation for edge machine learning.
//!
//! Users upload training samples over a shared multi-antenna uplink to an
//! edge server that trains one classifier per task. Each task's error is
//! predicted from its sample count by a fitted power-law learning curve,
//! and transmit powers are chosen to minimize the worst weighted predicted
//! error across tasks.
//!
//! Modules:
//!
//! - [`scenario`]: problem instances, TOML loading, unit conversions.
//! - [`channel`]: channel draws, MRC gains, rates and sample counts.
//! - [`error_model`]: learning-curve prediction and fitting.
//! - [`baselines`]: water-filling and max-min fairness.
//! - [`asymptotic`]: closed-form allocation for one user per task.
//! - [`mm`]: majorization-minimization for interference-coupled gains.
//! - [`mirror_prox`]: first-order saddle-point solver for large systems.
//! - [`uncertainty`]: confidence gating into per-user sample bounds.
//! - [`harness`]: Monte-Carlo runs, scheme comparison and sweeps.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod error_model;
pub mod harness;
pub mod mirror_prox;
pub mod mm;
pub mod scenario;
pub mod trace;
pub mod uncertainty;

pub use error::{Error, Result};
pub use scenario::Scenario;
