//! Discrete calculus on the embedded ring.
//!
//! Site `x` of the ring sits at macroscopic coordinate `x/n`, wrapped to the
//! symmetric window `[-N/2n, N/2n)`. Test functions decay fast enough that
//! the wrap seam carries no weight at desk scales.

use crate::fields::testfn::TestFunction;

/// Geometry of the lattice embedding: `sites` ring sites at spacing `1/n`.
#[derive(Debug, Clone, Copy)]
pub struct RingGeometry {
    pub scale: u32,
    pub sites: usize,
}

impl RingGeometry {
    pub fn new(scale: u32, sites: usize) -> Self {
        RingGeometry { scale, sites }
    }

    /// Macroscopic coordinate of a site index, wrapped to `[-L/2, L/2)`.
    #[inline]
    pub fn coord(&self, site: i64) -> f64 {
        let n = self.sites as i64;
        let x = site.rem_euclid(n);
        let half = n / 2;
        let signed = if x >= half { x - n } else { x };
        signed as f64 / self.scale as f64
    }

    /// Coordinate shifted by a (real-valued) frame offset in site units.
    #[inline]
    pub fn coord_with_frame(&self, site: i64, frame_sites: f64) -> f64 {
        let n = self.sites as f64;
        let mut x = (site as f64 - frame_sites) % n;
        if x < 0.0 {
            x += n;
        }
        let half = n / 2.0;
        let signed = if x >= half { x - n } else { x };
        signed / self.scale as f64
    }

    /// `grad_n u(x) = n { u((x+1)/n) - u(x/n) }`.
    pub fn grad_n(&self, u: &TestFunction, site: i64) -> f64 {
        let n = self.scale as f64;
        n * (u.eval(self.coord(site + 1)) - u.eval(self.coord(site)))
    }

    /// `lap_n u(x) = n^2 { u((x+1)/n) + u((x-1)/n) - 2 u(x/n) }`.
    pub fn lap_n(&self, u: &TestFunction, site: i64) -> f64 {
        let n = self.scale as f64;
        n * n
            * (u.eval(self.coord(site + 1)) + u.eval(self.coord(site - 1))
                - 2.0 * u.eval(self.coord(site)))
    }

    /// `E_n(u) = (1/n) sum_x (grad_n u)^2`.
    pub fn energy_n(&self, u: &TestFunction) -> f64 {
        let n = self.scale as f64;
        (0..self.sites as i64).map(|x| self.grad_n(u, x).powi(2)).sum::<f64>() / n
    }

    /// Per-site weights `u(x/n)`.
    pub fn point_weights(&self, u: &TestFunction) -> Vec<f64> {
        (0..self.sites as i64).map(|x| u.eval(self.coord(x))).collect()
    }

    /// Per-site weights `grad_n u` (discrete gradient).
    pub fn grad_weights(&self, u: &TestFunction) -> Vec<f64> {
        (0..self.sites as i64).map(|x| self.grad_n(u, x)).collect()
    }

    /// Per-site weights of the exact derivative `u'(x/n)`.
    pub fn exact_grad_weights(&self, u: &TestFunction) -> Vec<f64> {
        (0..self.sites as i64).map(|x| u.grad(self.coord(x))).collect()
    }

    /// Per-site weights `lap_n u` (discrete Laplacian).
    pub fn lap_weights(&self, u: &TestFunction) -> Vec<f64> {
        (0..self.sites as i64).map(|x| self.lap_n(u, x)).collect()
    }
}

/// Plain-line discrete gradient of a closure, for identities off the ring.
pub fn grad_n_fn(u: impl Fn(f64) -> f64, x: i64, n: u32) -> f64 {
    let nf = n as f64;
    nf * (u((x + 1) as f64 / nf) - u(x as f64 / nf))
}

/// Plain-line discrete Laplacian of a closure.
pub fn lap_n_fn(u: impl Fn(f64) -> f64, x: i64, n: u32) -> f64 {
    let nf = n as f64;
    nf * nf * (u((x + 1) as f64 / nf) + u((x - 1) as f64 / nf) - 2.0 * u(x as f64 / nf))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_has_unit_gradient() {
        for n in [1u32, 7, 64] {
            for x in [-5i64, 0, 3] {
                assert!((grad_n_fn(|y| y, x, n) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn quadratic_has_laplacian_two() {
        for n in [1u32, 8, 128] {
            for x in [-4i64, 0, 9] {
                assert!((lap_n_fn(|y| y * y, x, n) - 2.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn discrete_energy_converges_to_quarter() {
        // E_n(her_0) -> E(her_0) = 1/4, relative error < 1% at n = 256.
        let u = TestFunction::hermite(0);
        let geom = RingGeometry::new(256, 256 * 32);
        let e = geom.energy_n(&u);
        assert!((e - 0.25).abs() / 0.25 < 0.01, "E_n = {e}");
    }

    #[test]
    fn coordinates_wrap_symmetrically() {
        let geom = RingGeometry::new(4, 32);
        assert_eq!(geom.coord(0), 0.0);
        assert_eq!(geom.coord(15), 3.75);
        assert_eq!(geom.coord(16), -4.0);
        assert_eq!(geom.coord(31), -0.25);
        assert_eq!(geom.coord(-1), -0.25);
        // Frame offsets shift continuously.
        let c = geom.coord_with_frame(4, 1.5);
        assert!((c - 0.625).abs() < 1e-12);
    }
}
