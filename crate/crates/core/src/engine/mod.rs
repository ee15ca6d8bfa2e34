//! Event-driven simulation of the accelerated weakly asymmetric process.

pub mod fenwick;
pub mod generator;
pub mod rates;
pub mod sim;
pub mod state;

pub use generator::{bernoulli_vector, evolve_distribution, exact_generator, MAX_EXACT_RING};
pub use rates::{bond_rate, RateKernel};
pub use sim::{replica_rng, run, run_from, sample_initial, NullMonitor, RunSummary, TrajectoryMonitor};
pub use state::LatticeState;
