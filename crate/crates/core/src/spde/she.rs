//! Finite-difference stochastic heat equation with multiplicative noise.
//!
//! Explicit Euler-Maruyama for `dz = D Lap z dt + coupling sqrt(2 chi / D) z dB`
//! on a periodic grid, with the standard `1/sqrt(dx)` scaling of cell noise.
//! Positivity of `z` is monitored; losing it means the step size is too
//! coarse for the noise level and the run must abort.

use crate::error::{Result, SimError};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct SheGrid {
    pub z: Vec<f64>,
    pub dx: f64,
    pub dt: f64,
    pub diffusivity: f64,
    pub coupling: f64,
    pub chi: f64,
    pub time: f64,
}

impl SheGrid {
    /// Flat profile `z = 1`.
    pub fn flat(cells: usize, circumference: f64, dt: f64, diffusivity: f64, coupling: f64, chi: f64) -> Result<Self> {
        let dx = circumference / cells as f64;
        let grid = SheGrid { z: vec![1.0; cells], dx, dt, diffusivity, coupling, chi, time: 0.0 };
        grid.check_stability()?;
        Ok(grid)
    }

    /// Cole-Hopf initial data `z(0) = exp(coupling * h0)` where `h0` is a
    /// two-sided Brownian path of variance `chi`, pinned at the origin and
    /// bridged so the profile is periodic.
    pub fn from_brownian_initial(
        cells: usize,
        circumference: f64,
        dt: f64,
        diffusivity: f64,
        coupling: f64,
        chi: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let dx = circumference / cells as f64;
        let mut path = Vec::with_capacity(cells);
        let mut acc = 0.0;
        for _ in 0..cells {
            path.push(acc);
            let g: f64 = rng.sample(StandardNormal);
            acc += g * (chi * dx).sqrt();
        }
        // Bridge: remove the linear drift so the wrap is continuous, then
        // re-pin at the cell closest to x = 0 (index cells/2 on the
        // symmetric window).
        let total = acc;
        let n = cells as f64;
        for (i, v) in path.iter_mut().enumerate() {
            *v -= total * i as f64 / n;
        }
        let pin = path[cells / 2];
        let z = path.iter().map(|h| (coupling * (h - pin)).exp()).collect();
        let grid = SheGrid { z, dx, dt, diffusivity, coupling, chi, time: 0.0 };
        grid.check_stability()?;
        Ok(grid)
    }

    fn check_stability(&self) -> Result<()> {
        let limit = self.dx * self.dx / (4.0 * self.diffusivity);
        if self.dt > limit {
            return Err(SimError::Input(format!(
                "dt = {} exceeds the stability bound dx^2/(4D) = {limit}",
                self.dt
            )));
        }
        Ok(())
    }

    /// One explicit step. Fails with step-size advice if positivity is lost.
    pub fn step(&mut self, rng: &mut impl Rng) -> Result<()> {
        let m = self.z.len();
        let lam = self.diffusivity * self.dt / (self.dx * self.dx);
        let noise_amp =
            self.coupling * (2.0 * self.chi / self.diffusivity).sqrt() * (self.dt / self.dx).sqrt();
        let mut next = vec![0.0; m];
        for i in 0..m {
            let left = self.z[(i + m - 1) % m];
            let right = self.z[(i + 1) % m];
            let xi: f64 = rng.sample(StandardNormal);
            next[i] = self.z[i] + lam * (left + right - 2.0 * self.z[i])
                + self.z[i] * noise_amp * xi;
        }
        if next.iter().any(|&v| v <= 0.0) {
            return Err(SimError::Numerical(format!(
                "stochastic heat solution lost positivity at t = {}; restart with a smaller dt (currently {})",
                self.time, self.dt
            )));
        }
        self.z = next;
        self.time += self.dt;
        Ok(())
    }

    /// Advance to (approximately) time `t` in whole steps.
    pub fn run_until(&mut self, t: f64, rng: &mut impl Rng) -> Result<()> {
        while self.time + 0.5 * self.dt < t {
            self.step(rng)?;
        }
        Ok(())
    }

    /// Grid coordinate of cell `i` on the symmetric window.
    pub fn coord(&self, i: usize) -> f64 {
        let m = self.z.len();
        (i as f64 - (m / 2) as f64) * self.dx
    }
}
