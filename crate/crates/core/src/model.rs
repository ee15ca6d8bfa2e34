//! Model parameterization and structural condition checks.

use crate::error::{Result, SimError};
use crate::local_fn::LocalFunction;
use crate::thermo::ThermoPolynomial;
use serde::{Deserialize, Serialize};

/// Full parameterization of one weakly asymmetric speed-change experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Exchange-rate modulation `r` (must not depend on offsets 0 and 1).
    pub rate: LocalFunction,
    /// Asymmetry strength `a`; the drift term scales as `a / sqrt(n)`.
    pub asymmetry: f64,
    /// Scaling parameter `n` (inverse mesh, `n^2` time acceleration).
    pub scale: u32,
    /// Particle density of the Bernoulli initial/invariant measure.
    pub density: f64,
    /// Number of ring sites; must be a multiple of `scale`.
    pub ring_size: usize,
    /// Macroscopic time horizon.
    pub horizon: f64,
}

/// Outcome of the structural checks on a rate function.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionReport {
    /// Largest `e0 > 0` with `e0 <= r <= 1/e0` over all patterns.
    pub ellipticity: f64,
    /// True iff `r` never depends on the occupancies at offsets 0 and 1.
    pub reversible: bool,
    /// Always true for table-backed functions; reports the window size.
    pub finite_range: bool,
    pub window_size: usize,
}

impl ModelSpec {
    pub fn new(
        rate: LocalFunction,
        asymmetry: f64,
        scale: u32,
        density: f64,
        ring_size: usize,
        horizon: f64,
    ) -> Result<Self> {
        let spec = ModelSpec { rate, asymmetry, scale, density, ring_size, horizon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale == 0 {
            return Err(SimError::Input("scale n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(SimError::Input("density must lie in [0, 1]".into()));
        }
        if self.ring_size == 0 || self.ring_size % self.scale as usize != 0 {
            return Err(SimError::Input(format!(
                "ring size {} must be a positive multiple of n = {}",
                self.ring_size, self.scale
            )));
        }
        if self.asymmetry < 0.0 && (self.scale as f64) < self.asymmetry * self.asymmetry {
            return Err(SimError::Input(
                "for a < 0 the suppression probability needs n >= a^2".into(),
            ));
        }
        verify_conditions(&self.rate)?;
        Ok(())
    }

    /// Grand-canonical polynomial of the rate: `sigma -> E_sigma[r]`.
    pub fn rate_polynomial(&self) -> ThermoPolynomial {
        ThermoPolynomial::grand_canonical(&self.rate)
    }

    /// Static compressibility `chi(rho) = rho (1 - rho)`.
    pub fn chi(&self) -> f64 {
        self.density * (1.0 - self.density)
    }

    /// Macroscopic circumference of the ring, `N / n`.
    pub fn macro_length(&self) -> f64 {
        self.ring_size as f64 / self.scale as f64
    }
}

/// Check ellipticity, reversibility and finite range of a rate table.
///
/// Reversibility in the exchange sense: the rate of the `{0,1}` swap may not
/// depend on the occupancies being swapped, which for a table means the
/// value is constant along the bits at offsets 0 and 1.
pub fn verify_conditions(rate: &LocalFunction) -> Result<ConditionReport> {
    let mut e0 = f64::INFINITY;
    for &v in &rate.table {
        if v <= 0.0 {
            return Err(SimError::Model(format!("rate takes non-positive value {v}")));
        }
        e0 = e0.min(v).min(1.0 / v);
    }
    let reversible = !rate.depends_on(0) && !rate.depends_on(1);
    Ok(ConditionReport {
        ellipticity: e0,
        reversible,
        finite_range: true,
        window_size: rate.window_len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rate_is_reversible_with_unit_ellipticity() {
        let rep = verify_conditions(&LocalFunction::constant(1.0)).unwrap();
        assert_eq!(rep.ellipticity, 1.0);
        assert!(rep.reversible);
        assert!(rep.finite_range);
    }

    #[test]
    fn rate_depending_on_swapped_site_is_not_reversible() {
        // r(eta) = 1 + eta(0)/2: exhaustive table check flags offset 0.
        let r = LocalFunction::new(vec![0], vec![1.0, 1.5]).unwrap();
        let rep = verify_conditions(&r).unwrap();
        assert!(!rep.reversible);
    }

    #[test]
    fn constant_two_rate_has_half_ellipticity() {
        let rep = verify_conditions(&LocalFunction::constant(2.0)).unwrap();
        assert_eq!(rep.ellipticity, 0.5);
    }

    #[test]
    fn nonpositive_rate_is_model_error() {
        let r = LocalFunction::new(vec![2], vec![1.0, 0.0]).unwrap();
        assert!(verify_conditions(&r).is_err());
    }

    #[test]
    fn spec_validation() {
        let r = LocalFunction::constant(1.0);
        assert!(ModelSpec::new(r.clone(), 1.0, 4, 0.5, 128, 1.0).is_ok());
        assert!(ModelSpec::new(r.clone(), 1.0, 4, 0.5, 126, 1.0).is_err());
        assert!(ModelSpec::new(r.clone(), -3.0, 4, 0.5, 128, 1.0).is_err());
        assert!(ModelSpec::new(r, -2.0, 4, 0.5, 128, 1.0).is_ok());
    }
}
