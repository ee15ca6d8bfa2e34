//! Test functions and fluctuation-field functionals of trajectories.

pub mod accumulator;
pub mod calculus;
#[allow(clippy::module_inception)]
pub mod fields;
pub mod height;
pub mod quad;
pub mod testfn;

pub use accumulator::{FieldSeries, ObserverSet};
pub use calculus::{grad_n_fn, lap_n_fn, RingGeometry};
pub use fields::FieldContext;
pub use height::{centered_height, height_grad_pairing, height_pairing, height_profiles, HeightProfiles};
pub use testfn::{inner_product, sigmoid, theta, TestFunction};
