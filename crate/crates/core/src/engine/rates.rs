//! Exchange rates of the accelerated weakly asymmetric dynamics.
//!
//! Bond `x` is active when the occupancies at `x` and `x+1` differ, and
//! carries the accelerated rate
//!
//! `n^2 r_x(eta) { 1 + (a/sqrt n) eta(x)(1 - eta(x+1)) }`.
//!
//! The drift term rides on the jump direction that raises the bond current,
//! so the mean instantaneous current at density `rho` is
//! `n^{3/2} a chi(rho) D(rho) = n^{3/2} H(rho)` and the centered current and
//! height fields are genuinely mean zero.

use crate::local_fn::LocalFunction;
use crate::model::ModelSpec;
use crate::engine::state::LatticeState;

/// Precomputed rate evaluation for one model.
#[derive(Debug, Clone)]
pub struct RateKernel {
    rate: LocalFunction,
    accel: f64,
    drift: f64,
    affected: Vec<i64>,
}

impl RateKernel {
    pub fn new(spec: &ModelSpec) -> Self {
        let n = spec.scale as f64;
        let mut affected: Vec<i64> = vec![-1, 0, 1];
        for &o in &spec.rate.window {
            affected.push(-(o as i64));
            affected.push(1 - o as i64);
        }
        affected.sort_unstable();
        affected.dedup();
        RateKernel {
            rate: spec.rate.clone(),
            accel: n * n,
            drift: spec.asymmetry / n.sqrt(),
            affected,
        }
    }

    /// Bond offsets (relative to a swapped bond) whose rates can change.
    pub fn affected_offsets(&self) -> &[i64] {
        &self.affected
    }

    /// Rate of bond `x` given an occupancy lookup over signed sites.
    #[inline]
    pub fn bond_rate_with(&self, bond: i64, occ: &impl Fn(i64) -> bool) -> f64 {
        let here = occ(bond);
        let next = occ(bond + 1);
        if here == next {
            return 0.0;
        }
        let r = self.rate.eval_with(|o| occ(bond + o as i64));
        let boost = if here { self.drift } else { 0.0 };
        self.accel * r * (1.0 + boost)
    }
}

/// Rate of one ring bond; zero for neutral exchanges.
pub fn bond_rate(spec: &ModelSpec, state: &LatticeState, bond: usize) -> f64 {
    let kernel = RateKernel::new(spec);
    kernel.bond_rate_with(bond as i64, &|s| state.occ_wrapped(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ssep_spec(a: f64, n: u32) -> ModelSpec {
        ModelSpec::new(LocalFunction::constant(1.0), a, n, 0.5, 32 * n as usize, 1.0).unwrap()
    }

    #[test]
    fn boosted_direction_carries_the_drift() {
        // r = 1, a = 1, n = 100: the jump that increases the current (a
        // particle moving right) runs at n^2 (1 + a/sqrt(n)) = 11000.
        let spec = ssep_spec(1.0, 100);
        let mut occ = vec![false; 3200];
        occ[7] = true;
        let state = LatticeState::new(occ);
        assert_eq!(bond_rate(&spec, &state, 7), 11000.0);
    }

    #[test]
    fn opposite_direction_is_unboosted() {
        let spec = ssep_spec(1.0, 100);
        let mut occ = vec![false; 3200];
        occ[8] = true;
        let state = LatticeState::new(occ);
        // Bond 7 sees (0, 1): a left move, rate n^2 regardless of a.
        assert_eq!(bond_rate(&spec, &state, 7), 10000.0);
        let spec2 = ssep_spec(-3.0, 100);
        assert_eq!(bond_rate(&spec2, &state, 7), 10000.0);
    }

    #[test]
    fn neutral_exchange_is_excluded() {
        let spec = ssep_spec(1.0, 10);
        let state = LatticeState::new(vec![true; 320]);
        for b in 0..10 {
            assert_eq!(bond_rate(&spec, &state, b), 0.0);
        }
    }

    #[test]
    fn speed_change_reads_the_neighborhood() {
        let r = LocalFunction::new(vec![-1, 2], vec![1.0, 1.5, 1.5, 2.0]).unwrap();
        let spec = ModelSpec::new(r, 0.0, 1, 0.5, 32, 1.0).unwrap();
        let mut occ = vec![false; 32];
        occ[4] = true; // bond 4 active, eta(3) = 0, eta(6) = 0
        occ[6] = true; // eta(bond+2) = 1
        let state = LatticeState::new(occ);
        assert_eq!(bond_rate(&spec, &state, 4), 1.5);
    }
}
