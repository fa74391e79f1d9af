//! Kernels, two-sided envelopes, Monte Carlo estimators and a verification harness for the
//! relativistic α-stable process X_t = B_{T(t)}, where B has generator Δ and T is an
//! exponentially tilted α/2-stable subordinator.

// `!(v > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod envelopes;
pub mod error;
pub mod kernels;
pub mod montecarlo;
pub mod quad;
pub mod special_fns;
pub mod subordinator;
pub mod verify;

pub use error::{Error, Result};
pub use quad::{Integral, QuadSpec};
pub use subordinator::{McConfig, ProcessParams};
