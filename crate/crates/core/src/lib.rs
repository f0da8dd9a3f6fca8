//! Forecasting of evolving 2-D boundaries with a Bayesian level-set model.
//!
//! A boundary is stored as a signed distance field on a rectangular grid.
//! Between observations the field moves along its normal at a speed
//! `v = X beta + Psi xi_t`, where `X` holds standardized spatial covariates,
//! `Psi` is a low-rank eigenbasis of an exponential correlation matrix, and
//! the coefficients `xi_t` follow a first-order vector autoregression. The
//! [`inference`] module fits this hierarchy with a Gibbs sampler and produces
//! posterior predictive forecasts that [`evaluation`] scores.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod evaluation;
pub mod grid;
pub mod inference;
pub mod io;
pub mod levelset;
pub mod series;

pub use error::{Error, ErrorKind, Result};
pub use grid::{BoundarySet, GridSpec, ScalarField};
pub use series::ObservationSeries;
