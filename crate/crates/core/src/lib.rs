//! Mixed-variable Bayesian optimization of small MLP regressors trained with
//! Levenberg–Marquardt.
//!
//! The crate is organised bottom-up:
//!
//! - [`space`]: hierarchical design spaces (meta / decreed / neutral roles) with
//!   continuous, integer, ordinal and categorical variables, Latin-hypercube DoE
//!   sampling, kernel encoding and exhaustive enumeration.
//! - [`kernel`]: the product correlation kernel over continuous, integer and
//!   categorical blocks (continuous relaxation or Gower distance for categories).
//! - [`gp`]: ordinary Kriging with profiled trend and variance, fitted by
//!   multi-start maximum likelihood.
//! - [`bo`]: the EGO loop driven by expected improvement.
//! - [`mlp`]: the network itself, analytic Jacobians and the zero-padding
//!   embedding of a small network into a larger one.
//! - [`lm`]: Levenberg–Marquardt training with validation early stopping.
//! - [`metrics`]: MSE, RMSE, MAPE and parameter efficiency.
//! - [`harness`]: datasets, run configuration, persistence and the
//!   `tune`/`train`/`eval`/`predict` commands behind the `lmbo` binary.
//!
//! Runnable walkthroughs of each capability live in the crate's `examples/`
//! directory.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bo;
pub mod error;
pub mod gp;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod lm;
pub mod metrics;
pub mod mlp;
pub mod space;

mod seed;

pub use error::{Error, Result};
