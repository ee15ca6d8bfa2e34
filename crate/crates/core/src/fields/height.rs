//! Height function of a trajectory.
//!
//! Two equivalent integer definitions are carried side by side:
//! `h_t(x) = J_t(x) - sum_{i<=x} eta_0(i)` (current-based) and
//! `h_t(x) = J_t(0) - sum_{i<=x} eta_t(i)` (occupation-based). Their
//! pointwise equality is the continuity relation, so it is asserted exactly
//! wherever heights are produced.

use crate::engine::state::LatticeState;
use crate::fields::fields::FieldContext;
use crate::fields::testfn::TestFunction;

/// Raw integer height profiles over window sites `x = 0..window`.
#[derive(Debug, Clone)]
pub struct HeightProfiles {
    pub from_current: Vec<i64>,
    pub from_occupation: Vec<i64>,
}

/// Compute both height definitions over `x in [0, window)`.
pub fn height_profiles(
    initial: &LatticeState,
    current: &LatticeState,
    window: usize,
) -> HeightProfiles {
    let mut from_current = Vec::with_capacity(window);
    let mut from_occupation = Vec::with_capacity(window);
    let mut sum0 = 0i64;
    let mut sum_t = 0i64;
    for x in 0..window as i64 {
        if x > 0 {
            sum0 += initial.occ_wrapped(x) as i64;
            sum_t += current.occ_wrapped(x) as i64;
        }
        let jx = current.currents[(x as usize) % current.len()];
        from_current.push(jx - sum0);
        from_occupation.push(current.currents[0] - sum_t);
    }
    HeightProfiles { from_current, from_occupation }
}

impl HeightProfiles {
    pub fn definitions_agree(&self) -> bool {
        self.from_current == self.from_occupation
    }
}

/// Centered, rescaled height `H_t(x/n) = (h_t(x) - n^{3/2} H(rho) t + rho x)/sqrt(n)`.
pub fn centered_height(ctx: &FieldContext, heights: &[i64], t: f64) -> Vec<f64> {
    let n = ctx.scale as f64;
    let centering = n.powf(1.5) * ctx.flux * t;
    heights
        .iter()
        .enumerate()
        .map(|(x, &h)| (h as f64 - centering + ctx.rho * x as f64) / n.sqrt())
        .collect()
}

/// Pairing `int H_t(x) u(x) dx` of the piecewise-linear height with a test
/// function, by the lattice Riemann sum (trapezoid on the linear pieces).
pub fn height_pairing(ctx: &FieldContext, centered: &[f64], u: &TestFunction) -> f64 {
    let n = ctx.scale as f64;
    let mut acc = 0.0;
    for (x, &h) in centered.iter().enumerate() {
        acc += h * u.eval(x as f64 / n);
    }
    acc / n
}

/// Pairing of the height with the exact gradient `int H_t (grad u) dx`,
/// which reproduces `Y_t(u)` up to `O(1/n)` interpolation error.
pub fn height_grad_pairing(ctx: &FieldContext, centered: &[f64], u: &TestFunction) -> f64 {
    let n = ctx.scale as f64;
    let mut acc = 0.0;
    for (x, &h) in centered.iter().enumerate() {
        acc += h * u.grad(x as f64 / n);
    }
    acc / n
}
