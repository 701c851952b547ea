//! Exact finite-sample distribution theory for just-identified
//! instrumental-variables inference under the bivariate-normal
//! reduced-form model, cross-validated by a seeded Monte Carlo oracle.
//!
//! The model has two free parameters: the population first-stage
//! F-statistic `E\[F\]` and the endogeneity correlation `rho`. Everything
//! downstream is indexed by that pair:
//!
//! * [`rejection`] — exact null rejection rates of the conventional Wald
//!   t-test, unconditional and conditional on first-stage sign-screening,
//!   plus worst-case searches and endogeneity cutoffs.
//! * [`bias`] — closed-form mean/median bias bounds for the conventional
//!   and sign-restricted-unbiased IV estimators, and the quadrature
//!   machinery for exact relative median bias.
//! * [`endogeneity`] — calibration of `rho` from published study
//!   summaries and the bounding arguments from effect-size and
//!   measurement-error restrictions.
//! * [`oracle`] — seeded Monte Carlo simulation of the normal model that
//!   independently verifies every quadrature and closed-form result.

// Validation guards are written as !(v > 0.0) on purpose: unlike
// v <= 0.0, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod endogeneity;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod model;
pub mod oracle;
pub mod rejection;
pub mod stats;

pub use error::{Error, Result};
pub use model::{DesignPoint, ModelParams, ReducedFormDraw};
