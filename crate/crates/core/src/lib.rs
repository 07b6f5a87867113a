//! Uncertainty-aware milling stability lobe diagrams.
//!
//! The pipeline runs from a tool description (or measured modes / FRF)
//! through cutting-force coefficients to zero-order stability lobes, then
//! propagates coefficient and modal uncertainty by Monte Carlo into a band
//! that splits the speed–depth plane into unconditionally stable,
//! conditional and unconditionally unstable regions.
//!
//! SI units are used throughout the library; the [`io`] layer converts the
//! rpm / mm / Hz / MPa units of job and result files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cutting;
pub mod error;
pub mod io;
pub mod stability;
pub mod tool_model;
pub mod uncertainty;
pub mod units;

pub use error::{ErrorKind, Result, SldError};
