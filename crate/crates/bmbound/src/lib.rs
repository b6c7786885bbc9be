//! Lower bounds of arbitrary odd polynomial order on the log-partition function
//! of Boltzmann machines.
//!
//! The library is organised in layers:
//!
//! * [`poly_bounds`] — the family of odd-order polynomials that bound `exp(x)`
//!   from below, together with analytic optimisation of their variational
//!   parameters.
//! * [`model`] — Boltzmann machines, SK-style random instances, mean-field
//!   solutions, corrected moments and exact enumeration oracles.
//! * [`graphs`] — enumeration of the partition multigraphs that organise the
//!   moment expansion, with persisted catalogs.
//! * [`evaluator`] — polynomial-time evaluation of `<dH^n>` by variable
//!   elimination over the partition catalogs.
//! * [`engine`] — assembly of the optimised bound on `log Z`, relative errors
//!   and derived correlation estimates.
//! * [`cli`] — catalog generation, single-instance reports and ensemble sweeps.

pub mod cli;
pub mod engine;
pub mod error;
pub mod evaluator;
pub mod graphs;
pub mod model;
pub mod numeric;
pub mod poly_bounds;

pub use error::{Error, Result};
