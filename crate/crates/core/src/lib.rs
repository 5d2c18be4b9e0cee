//! Representative audit sample selection.
//!
//! Given an observed population cross-classified by an error-prone target
//! variable `X`, a background variable `Y` and the audit inclusion flag `Z`,
//! this crate searches for the smallest set of additions to and removals from
//! an existing (possibly selective) audit sample that makes `X` and `Z`
//! conditionally independent given `Y`, as measured by the deviance of the
//! log-linear model `(XY)(YZ)`.
//!
//! The crate is `no_std` with `alloc`. The `std` feature adds
//! `std::error::Error` integration and the `parallel` feature runs solver
//! attempts and simulation replicates on rayon's thread pool without changing
//! any result.
//!
//! Modules:
//!
//! * [`table`]: the `(X, Y, Z)` contingency table, fitted counts and deviance.
//! * [`solver`]: multi-start log-barrier minimization producing an [`solver::AuditPlan`].
//! * [`sampler`]: realizes a plan as unit-level additions and removals.
//! * [`estimators`]: stratified estimates of `P(W = w)` and `P(X = x | W = w)` with variances.
//! * [`simulation`]: population generators and the simulation study harness.
//! * [`stats`]: regularized incomplete gamma and the chi-square quantile.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod estimators;
pub(crate) mod math;
pub mod rng;
pub mod sampler;
pub mod simulation;
pub mod solver;
pub mod stats;
pub mod table;

pub use error::Error;
pub use estimators::{AuditedData, AuditedRecord, EstimateReport, PopulationMargins};
pub use sampler::{realize, SampleSelection, UnitRecord};
pub use solver::{optimize, AuditPlan, Objective, SolverConfig};
pub use table::{AdjustedTable, ContingencyTable3};

pub type Result<T> = core::result::Result<T, Error>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
