//! Estimators and the statistical experiments of the laboratory.

pub mod estimate;
pub mod experiments;
pub mod gaussian;

pub use estimate::{EstimateWithError, ScalingFit};
pub use experiments::ModelContext;
pub use gaussian::{gaussianity_suite, ks_two_sample, GaussianityReport};
