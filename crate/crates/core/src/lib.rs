//! Simulation laboratory for one-dimensional weakly asymmetric speed-change
//! exclusion processes and their fluctuation fields.
//!
//! The crate is organized in layers:
//!
//! * exact deterministic machinery: local-function tables, model condition
//!   checks, thermodynamic polynomials, the canonical-ensemble oracle and
//!   small-sector eigensolvers;
//! * an event-driven kinetic Monte Carlo engine with per-bond current
//!   bookkeeping and a tiny-ring exact-generator oracle;
//! * test functions and fluctuation-field functionals of trajectories;
//! * reference SPDE solvers (spectral Ornstein-Uhlenbeck, stochastic heat
//!   equation, Cole-Hopf transform);
//! * statistics and the experiment harness behind the `simlab` CLI.

pub mod canonical;
pub mod error;
pub mod gradient;
pub mod local_fn;
pub mod model;
pub mod sector;
pub mod thermo;

pub mod engine;
pub mod fields;
pub mod spde;
pub mod stats;
pub mod harness;

pub use error::{Result, SimError};
pub use local_fn::LocalFunction;
pub use model::{ConditionReport, ModelSpec};
pub use thermo::{chi, ThermoPolynomial, TransportCoefficients};
