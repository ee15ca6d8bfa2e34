//! Cole-Hopf readout of the stochastic heat equation.
//!
//! The density-fluctuation reference field is
//! `Y(u) = -(1/a) int u'(x) log z(t, x) dx`, the slope of `(1/a) log z`
//! paired against `u` after integration by parts.

use crate::error::{Result, SimError};
use crate::fields::testfn::TestFunction;
use crate::spde::she::SheGrid;

/// Riemann sum of `-(1/a) u'(x) log z(t,x)` over the grid cells.
pub fn cole_hopf_field(grid: &SheGrid, u: &TestFunction, a: f64) -> Result<f64> {
    if a == 0.0 {
        return Err(SimError::Input("Cole-Hopf readout needs a != 0".into()));
    }
    let mut acc = 0.0;
    for (i, &z) in grid.z.iter().enumerate() {
        if z <= 0.0 {
            return Err(SimError::Numerical("nonpositive z in Cole-Hopf readout".into()));
        }
        acc += u.grad(grid.coord(i)) * z.ln();
    }
    Ok(-acc * grid.dx / a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::replica_rng;
    use crate::fields::testfn::inner_product;

    #[test]
    fn constant_profile_pairs_to_zero() {
        let grid = SheGrid::flat(256, 32.0, 0.001, 1.0, 0.0, 0.25).unwrap();
        let u = TestFunction::hermite(2);
        let v = cole_hopf_field(&grid, &u, 1.0).unwrap();
        // int u' = 0 for decaying u, so a constant log z contributes nothing.
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn initial_variance_matches_white_noise_marginal() {
        // At t = 0, z = e^{a h0} with h0 Brownian of variance chi:
        // Y(u) = -(1/a) int u' a h0 = -int u' h0, the white-noise quadratic
        // form. The periodic bridge subtracts the mass-mode contribution
        // chi (int u)^2 / L, so a mean-zero u sees exactly chi <u, u>.
        let chi = 0.25;
        let a = 1.0;
        let ell = 32.0;
        let reps = 4000u64;
        let cases = [
            TestFunction::hermite(0),
            TestFunction::combination(
                2f64.sqrt(),
                TestFunction::hermite(2),
                -1.0,
                TestFunction::hermite(0),
            ),
        ];
        for (ci, u) in cases.iter().enumerate() {
            let mut acc = 0.0;
            let mut acc2 = 0.0;
            for rep in 0..reps {
                let mut rng = replica_rng(6 + ci as u64, rep);
                let grid = SheGrid::from_brownian_initial(512, ell, 0.0005, 1.0, a, chi, &mut rng)
                    .unwrap();
                let v = cole_hopf_field(&grid, u, a).unwrap();
                acc += v;
                acc2 += v * v;
            }
            let mean = acc / reps as f64;
            let var = acc2 / reps as f64 - mean * mean;
            let mass = u.mass().unwrap();
            let want = chi * (inner_product(u, u) - mass * mass / ell);
            assert!(
                (var - want).abs() < 0.05 * want,
                "case {ci}: var {var} vs {want} (mean {mean})"
            );
        }
    }
}
