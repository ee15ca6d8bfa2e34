//! Reference continuum solvers for cross-validation of the particle fields.

pub mod cole_hopf;
pub mod ou;
pub mod she;

pub use cole_hopf::cole_hopf_field;
pub use ou::SpectralOu;
pub use she::SheGrid;
