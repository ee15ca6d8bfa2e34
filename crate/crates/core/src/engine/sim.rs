//! Continuous-time event loop.
//!
//! Standard kinetic Monte Carlo: exponential waiting time at the total rate,
//! bond chosen proportionally to its rate through the Fenwick tree, swap
//! applied, and only the bonds whose rate window overlaps the swapped pair
//! are refreshed. The state is piecewise constant between events, which is
//! what makes exact time integration of observables possible.

use crate::engine::fenwick::RateTree;
use crate::engine::rates::RateKernel;
use crate::engine::state::LatticeState;
use crate::error::{Result, SimError};
use crate::model::ModelSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Per-replica RNG stream: one master seed, one counter-indexed stream.
///
/// Streams are independent and reproducible regardless of how replicas are
/// scheduled across workers.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// Callbacks a trajectory consumer can register with the event loop.
///
/// `advance` is invoked for every interval on which the state is frozen, so
/// summing `value * dt` inside it computes exact time integrals.
pub trait TrajectoryMonitor {
    fn advance(&mut self, _state: &LatticeState, _dt: f64) {}
    fn before_swap(&mut self, _state: &LatticeState, _bond: usize) {}
    fn after_swap(&mut self, _state: &LatticeState, _bond: usize) {}
    fn sample(&mut self, _t: f64, _state: &LatticeState) {}
}

/// Monitor that does nothing; useful for pure end-state runs.
pub struct NullMonitor;
impl TrajectoryMonitor for NullMonitor {}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: LatticeState,
    pub events: u64,
}

/// Draw the i.i.d. Bernoulli(rho) initial configuration.
pub fn sample_initial(spec: &ModelSpec, rng: &mut impl Rng) -> LatticeState {
    let occ: Vec<bool> = (0..spec.ring_size).map(|_| rng.gen::<f64>() < spec.density).collect();
    LatticeState::new(occ)
}

/// Simulate one replica from the Bernoulli initial measure.
pub fn run(
    spec: &ModelSpec,
    master_seed: u64,
    replica: u64,
    sample_times: &[f64],
    monitor: &mut dyn TrajectoryMonitor,
) -> Result<RunSummary> {
    let mut rng = replica_rng(master_seed, replica);
    let initial = sample_initial(spec, &mut rng);
    run_from(spec, initial, &mut rng, sample_times, monitor)
}

/// Simulate from an explicit initial configuration.
pub fn run_from(
    spec: &ModelSpec,
    initial: LatticeState,
    rng: &mut impl Rng,
    sample_times: &[f64],
    monitor: &mut dyn TrajectoryMonitor,
) -> Result<RunSummary> {
    let n_sites = spec.ring_size;
    if initial.len() != n_sites {
        return Err(SimError::Input(format!(
            "initial state has {} sites, spec says {}",
            initial.len(),
            n_sites
        )));
    }
    let horizon = spec.horizon;
    if sample_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(SimError::Input("sample times must be sorted".into()));
    }
    if sample_times.last().copied().unwrap_or(0.0) > horizon + 1e-12 {
        return Err(SimError::Input("sample times beyond the horizon".into()));
    }

    let kernel = RateKernel::new(spec);
    let mut state = initial;
    let occ_rates: Vec<f64> = (0..n_sites)
        .map(|b| kernel.bond_rate_with(b as i64, &|s| state.occ_wrapped(s)))
        .collect();
    let mut tree = RateTree::new(occ_rates);

    let mut t = 0.0f64;
    let mut si = 0usize;
    let mut events = 0u64;
    let wrap = |b: i64| -> usize { b.rem_euclid(n_sites as i64) as usize };

    loop {
        let total = tree.total();
        if total <= 0.0 {
            // Frozen configuration: deliver remaining samples, advance the
            // clock to the horizon.
            while si < sample_times.len() {
                let s = sample_times[si];
                monitor.advance(&state, s - t);
                t = s;
                state.clock = t;
                monitor.sample(t, &state);
                si += 1;
            }
            monitor.advance(&state, horizon - t);
            t = horizon;
            break;
        }
        let u: f64 = rng.gen();
        let dt = -(1.0 - u).ln() / total;
        let t_next = t + dt;

        while si < sample_times.len() && sample_times[si] <= t_next.min(horizon) {
            let s = sample_times[si];
            monitor.advance(&state, s - t);
            t = s;
            state.clock = t;
            monitor.sample(t, &state);
            si += 1;
        }
        if t_next >= horizon {
            monitor.advance(&state, horizon - t);
            t = horizon;
            break;
        }
        monitor.advance(&state, t_next - t);
        t = t_next;
        state.clock = t;

        let target: f64 = rng.gen::<f64>() * total;
        let bond = tree.sample(target);
        monitor.before_swap(&state, bond);
        state.apply_swap(bond);
        monitor.after_swap(&state, bond);
        events += 1;

        for &d in kernel.affected_offsets() {
            let b = wrap(bond as i64 + d);
            let r = kernel.bond_rate_with(b as i64, &|s| state.occ_wrapped(s));
            tree.set(b, r);
        }

        if events % (1 << 20) == 0 {
            verify_schedule(&kernel, &state, &mut tree, events)?;
        }
    }
    state.clock = t;
    Ok(RunSummary { final_state: state, events })
}

/// Consistency audit of the schedule against freshly computed rates.
///
/// Debug builds check every bond; release builds spot-check a rotating
/// sample and then clear accumulated float drift from the tree.
fn verify_schedule(
    kernel: &RateKernel,
    state: &LatticeState,
    tree: &mut RateTree,
    events: u64,
) -> Result<()> {
    let n = state.len();
    let full = cfg!(debug_assertions);
    let checks: Vec<usize> = if full {
        (0..n).collect()
    } else {
        (0..16u64).map(|i| ((events / (1 << 20) + i * 17) % n as u64) as usize).collect()
    };
    for b in checks {
        let expect = kernel.bond_rate_with(b as i64, &|s| state.occ_wrapped(s));
        let stored = tree.value(b);
        if (expect - stored).abs() > 1e-7 * (1.0 + expect.abs()) {
            return Err(SimError::Numerical(format!(
                "schedule drift at bond {b}: stored {stored}, recomputed {expect}"
            )));
        }
    }
    tree.rebuild();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_fn::LocalFunction;

    fn ssep(n: u32, a: f64, rho: f64, horizon: f64) -> ModelSpec {
        ModelSpec::new(LocalFunction::constant(1.0), a, n, rho, 32 * n as usize, horizon).unwrap()
    }

    #[test]
    fn all_empty_and_all_full_are_frozen() {
        for rho in [0.0, 1.0] {
            let spec = ssep(2, 1.0, rho, 0.5);
            let out = run(&spec, 7, 0, &[0.25], &mut NullMonitor).unwrap();
            assert_eq!(out.events, 0);
            assert_eq!(out.final_state.clock, 0.5);
            let expected = rho == 1.0;
            assert!(out.final_state.occupancy.iter().all(|&b| b == expected));
        }
    }

    #[test]
    fn determinism_bit_identical() {
        let spec = ssep(4, 1.0, 0.5, 0.2);
        let a = run(&spec, 42, 3, &[0.1, 0.2], &mut NullMonitor).unwrap();
        let b = run(&spec, 42, 3, &[0.1, 0.2], &mut NullMonitor).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.final_state.occupancy, b.final_state.occupancy);
        assert_eq!(a.final_state.currents, b.final_state.currents);
        assert_eq!(a.final_state.clock.to_bits(), b.final_state.clock.to_bits());
    }

    #[test]
    fn conservation_and_continuity_along_trajectories() {
        let spec = ssep(2, 1.5, 0.4, 0.3);
        for rep in 0..20u64 {
            let mut rng = replica_rng(11, rep);
            let init = sample_initial(&spec, &mut rng);
            let count = init.particle_count;
            let out = run_from(&spec, init.clone(), &mut rng, &[], &mut NullMonitor).unwrap();
            assert_eq!(out.final_state.particle_count, count);
            assert!(out.final_state.continuity_holds(&init));
        }
    }

    #[test]
    fn single_particle_event_count_is_poisson() {
        // One particle, r = 1, a = 0: two active bonds, total rate 2 n^2.
        // Over time T the event count is Poisson(2 n^2 T); check the
        // empirical mean against 3 standard errors over replicas.
        let n = 8u32;
        let horizon = 1.0;
        let spec = ModelSpec::new(LocalFunction::constant(1.0), 0.0, n, 0.0, 256, horizon).unwrap();
        let mut occ = vec![false; 256];
        occ[128] = true;
        let lam = 2.0 * (n as f64).powi(2) * horizon;
        let reps = 800u64;
        let mut total_events = 0u64;
        for rep in 0..reps {
            let mut rng = replica_rng(99, rep);
            let out =
                run_from(&spec, LatticeState::new(occ.clone()), &mut rng, &[], &mut NullMonitor)
                    .unwrap();
            total_events += out.events;
        }
        let mean = total_events as f64 / reps as f64;
        let se = (lam / reps as f64).sqrt();
        assert!(
            (mean - lam).abs() < 3.0 * se,
            "mean {mean} vs {lam} (se {se})"
        );
    }

    struct CrossingCounter {
        forward: u64,
        backward: u64,
    }
    impl TrajectoryMonitor for CrossingCounter {
        fn before_swap(&mut self, state: &LatticeState, bond: usize) {
            if state.occ(bond) {
                self.forward += 1;
            } else {
                self.backward += 1;
            }
        }
    }

    #[test]
    fn detailed_balance_at_zero_asymmetry() {
        // Forward and backward crossing counts balance within 4 SE at a = 0.
        let spec = ssep(4, 0.0, 0.5, 1.0);
        let mut counter = CrossingCounter { forward: 0, backward: 0 };
        for rep in 0..32u64 {
            run(&spec, 5, rep, &[], &mut counter).unwrap();
        }
        let net = counter.forward as f64 - counter.backward as f64;
        let crossings = (counter.forward + counter.backward) as f64;
        assert!(crossings > 0.0);
        assert!(net.abs() < 4.0 * crossings.sqrt(), "net {net} of {crossings}");
    }
}
