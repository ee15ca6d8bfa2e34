//! Exact time integration of trajectory functionals.
//!
//! The state is piecewise constant between events, so every time integral
//! `int_0^t G(eta_s) ds` is a finite sum of `G * dt` terms. The two field
//! shapes that cover all integrands of interest are
//!
//! * weighted local-function fields `G = sum_x g(tau_x eta) w(x)`, updated
//!   in O(|window|) per event, and
//! * weighted block-quadratic fields `G = sum_x Q_rho(l; tau_x eta) w(x)`,
//!   updated in O(1) per event because a swap changes exactly two block
//!   sums.

use crate::engine::sim::TrajectoryMonitor;
use crate::engine::state::LatticeState;
use crate::fields::fields::{block_sum, FieldContext};
use crate::fields::testfn::TestFunction;
use crate::local_fn::LocalFunction;
use serde::Serialize;
use std::sync::Arc;

/// Time-stamped samples of one named scalar functional for one replica.
#[derive(Debug, Clone, Serialize)]
pub struct FieldSeries {
    pub name: String,
    pub test_function: String,
    pub replica: u64,
    pub samples: Vec<(f64, f64)>,
}

impl FieldSeries {
    /// JSON-lines records `{replica, t, name, value}`.
    pub fn jsonl_records(&self) -> Vec<String> {
        self.samples
            .iter()
            .map(|(t, v)| {
                format!(
                    "{{\"replica\":{},\"t\":{t},\"name\":{},\"value\":{v}}}",
                    self.replica,
                    serde_json::to_string(&self.name).unwrap()
                )
            })
            .collect()
    }
}

/// `G = sum_x g(tau_x eta) w(x)` with exact incremental maintenance.
struct WeightedLocalField {
    name: String,
    offsets: Vec<i64>,
    table: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
    value: f64,
    integral: f64,
    affected: Vec<i64>,
    scratch: Vec<f64>,
}

impl WeightedLocalField {
    fn new(name: String, g: &LocalFunction, weights: Vec<f64>, scale: f64) -> Self {
        let offsets: Vec<i64> = g.window.iter().map(|&o| o as i64).collect();
        let mut affected: Vec<i64> = offsets.iter().flat_map(|&o| [-o, 1 - o]).collect();
        affected.sort_unstable();
        affected.dedup();
        let k = affected.len();
        WeightedLocalField {
            name,
            offsets,
            table: g.table.clone(),
            weights,
            scale,
            value: 0.0,
            integral: 0.0,
            affected,
            scratch: vec![0.0; k],
        }
    }

    #[inline]
    fn contribution(&self, state: &LatticeState, x: i64) -> f64 {
        local_contribution(&self.offsets, &self.table, &self.weights, state, x)
    }

    fn recompute(&mut self, state: &LatticeState) {
        self.value = (0..state.len() as i64).map(|x| self.contribution(state, x)).sum();
    }
}

#[inline]
fn local_contribution(
    offsets: &[i64],
    table: &[f64],
    weights: &[f64],
    state: &LatticeState,
    x: i64,
) -> f64 {
    let n = state.len() as i64;
    let site = x.rem_euclid(n) as usize;
    let w = weights[site];
    if w == 0.0 {
        return 0.0;
    }
    let mut pattern = 0usize;
    for (j, &o) in offsets.iter().enumerate() {
        if state.occ_wrapped(x + o) {
            pattern |= 1 << j;
        }
    }
    table[pattern] * w
}

/// `G = sum_x q(block_l(x)) w(x)` where `q(s) = (s/l - rho)^2 - chi/l`.
struct BlockQuadraticField {
    name: String,
    ell: usize,
    rho: f64,
    wick: bool,
    weights: Vec<f64>,
    block_sums: Vec<i32>,
    value: f64,
    integral: f64,
}

impl BlockQuadraticField {
    fn new(name: String, ell: usize, rho: f64, wick: bool, weights: Vec<f64>) -> Self {
        BlockQuadraticField {
            name,
            ell,
            rho,
            wick,
            weights,
            block_sums: Vec::new(),
            value: 0.0,
            integral: 0.0,
        }
    }

    #[inline]
    fn q(&self, sum: i32) -> f64 {
        let d = sum as f64 / self.ell as f64 - self.rho;
        let base = d * d;
        if self.wick {
            base - self.rho * (1.0 - self.rho) / self.ell as f64
        } else {
            base
        }
    }

    fn recompute(&mut self, state: &LatticeState) {
        let n = state.len();
        self.block_sums = (0..n as i64).map(|x| block_sum(state, x, self.ell) as i32).collect();
        self.value = (0..n).map(|x| self.weights[x] * self.q(self.block_sums[x])).sum();
    }

    #[inline]
    fn shift_block(&mut self, x: usize, delta: i32) {
        let old = self.block_sums[x];
        let new = old + delta;
        self.block_sums[x] = new;
        let w = self.weights[x];
        if w != 0.0 {
            self.value += w * (self.q(new) - self.q(old));
        }
    }
}

/// A probe evaluated on the frozen state at each sample time.
enum Probe {
    Density { u: Arc<TestFunction> },
    Current { u: Arc<TestFunction> },
}

/// The single monitor object experiments attach to a run: point probes and
/// exact integrators, all emitting `FieldSeries`.
pub struct ObserverSet {
    ctx: FieldContext,
    replica: u64,
    probes: Vec<(String, Probe)>,
    probe_series: Vec<Vec<(f64, f64)>>,
    locals: Vec<WeightedLocalField>,
    local_series: Vec<Vec<(f64, f64)>>,
    blocks: Vec<BlockQuadraticField>,
    block_series: Vec<Vec<(f64, f64)>>,
    initial: Option<LatticeState>,
    forward_crossings: u64,
    backward_crossings: u64,
    events_since_refresh: u64,
    initialized: bool,
}

impl ObserverSet {
    pub fn new(ctx: FieldContext, replica: u64) -> Self {
        ObserverSet {
            ctx,
            replica,
            probes: Vec::new(),
            probe_series: Vec::new(),
            locals: Vec::new(),
            local_series: Vec::new(),
            blocks: Vec::new(),
            block_series: Vec::new(),
            initial: None,
            forward_crossings: 0,
            backward_crossings: 0,
            events_since_refresh: 0,
            initialized: false,
        }
    }

    /// Total (forward, backward) bond crossings seen so far.
    pub fn crossings(&self) -> (u64, u64) {
        (self.forward_crossings, self.backward_crossings)
    }

    pub fn context(&self) -> &FieldContext {
        &self.ctx
    }

    /// Density fluctuation field `Y_t(u)` sampled at observer times.
    pub fn probe_density(&mut self, name: &str, u: TestFunction) {
        self.probes.push((name.to_string(), Probe::Density { u: Arc::new(u) }));
        self.probe_series.push(Vec::new());
    }

    /// Centered current field `J_t(u)`.
    pub fn probe_current(&mut self, name: &str, u: TestFunction) {
        self.probes.push((name.to_string(), Probe::Current { u: Arc::new(u) }));
        self.probe_series.push(Vec::new());
    }

    /// Exact integral of a weighted local-function field; the sampled value
    /// at time `t` is `scale * int_0^t sum_x g(tau_x eta) w(x) ds`.
    pub fn integrate_local(
        &mut self,
        name: &str,
        g: &LocalFunction,
        weights: Vec<f64>,
        scale: f64,
    ) {
        self.locals.push(WeightedLocalField::new(name.to_string(), g, weights, scale));
        self.local_series.push(Vec::new());
    }

    /// Exact integral of a block-quadratic field
    /// `int_0^t sum_x q(eta^l(x)) w(x) ds` with optional Wick centering.
    pub fn integrate_block_quadratic(
        &mut self,
        name: &str,
        ell: usize,
        wick: bool,
        weights: Vec<f64>,
    ) {
        self.blocks.push(BlockQuadraticField::new(
            name.to_string(),
            ell,
            self.ctx.rho,
            wick,
            weights,
        ));
        self.block_series.push(Vec::new());
    }

    /// Initial configuration captured at the start of the run.
    pub fn initial_state(&self) -> Option<&LatticeState> {
        self.initial.as_ref()
    }

    pub fn into_series(self) -> Vec<FieldSeries> {
        let replica = self.replica;
        let mut out = Vec::new();
        for ((name, probe), samples) in self.probes.into_iter().zip(self.probe_series) {
            let tf = match &probe {
                Probe::Density { u } | Probe::Current { u } => u.name(),
            };
            out.push(FieldSeries { name, test_function: tf, replica, samples });
        }
        for (f, samples) in self.locals.into_iter().zip(self.local_series) {
            out.push(FieldSeries {
                name: f.name,
                test_function: String::new(),
                replica,
                samples,
            });
        }
        for (b, samples) in self.blocks.into_iter().zip(self.block_series) {
            out.push(FieldSeries {
                name: b.name,
                test_function: String::new(),
                replica,
                samples,
            });
        }
        out
    }

    fn ensure_initialized(&mut self, state: &LatticeState) {
        if self.initialized {
            return;
        }
        self.initial = Some(state.clone());
        for f in &mut self.locals {
            f.recompute(state);
        }
        for b in &mut self.blocks {
            b.recompute(state);
        }
        self.initialized = true;
    }
}

impl TrajectoryMonitor for ObserverSet {
    fn advance(&mut self, state: &LatticeState, dt: f64) {
        self.ensure_initialized(state);
        if dt == 0.0 {
            return;
        }
        for f in &mut self.locals {
            f.integral += f.value * dt;
        }
        for b in &mut self.blocks {
            b.integral += b.value * dt;
        }
    }

    fn before_swap(&mut self, state: &LatticeState, bond: usize) {
        self.ensure_initialized(state);
        for f in &mut self.locals {
            for k in 0..f.affected.len() {
                let d = f.affected[k];
                f.scratch[k] =
                    local_contribution(&f.offsets, &f.table, &f.weights, state, bond as i64 + d);
            }
            for k in 0..f.affected.len() {
                f.value -= f.scratch[k];
            }
        }
    }

    fn after_swap(&mut self, state: &LatticeState, bond: usize) {
        for f in &mut self.locals {
            for k in 0..f.affected.len() {
                let d = f.affected[k];
                f.value +=
                    local_contribution(&f.offsets, &f.table, &f.weights, state, bond as i64 + d);
            }
        }
        let n = state.len() as i64;
        // After the swap, occ(bond+1) tells the jump direction: true means
        // a particle moved right (site `bond` lost one).
        let right = state.occ_wrapped(bond as i64 + 1);
        if right {
            self.forward_crossings += 1;
        } else {
            self.backward_crossings += 1;
        }
        let (d_here, d_next) = if right { (-1, 1) } else { (1, -1) };
        for b in &mut self.blocks {
            let ell = b.ell as i64;
            let x1 = (bond as i64 - ell).rem_euclid(n) as usize;
            let x2 = bond;
            b.shift_block(x1, d_here);
            b.shift_block(x2, d_next);
        }
        self.events_since_refresh += 1;
        if self.events_since_refresh >= (1 << 21) {
            // Clear accumulated float drift in the incremental field values.
            for f in &mut self.locals {
                f.recompute(state);
            }
            for b in &mut self.blocks {
                b.recompute(state);
            }
            self.events_since_refresh = 0;
        }
    }

    fn sample(&mut self, t: f64, state: &LatticeState) {
        self.ensure_initialized(state);
        for (i, (_, probe)) in self.probes.iter().enumerate() {
            let v = match probe {
                Probe::Density { u } => self.ctx.density_field(state, u),
                Probe::Current { u } => self.ctx.current_field(state, u),
            };
            self.probe_series[i].push((t, v));
        }
        for (i, f) in self.locals.iter().enumerate() {
            self.local_series[i].push((t, f.scale * f.integral));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            self.block_series[i].push((t, b.integral));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{replica_rng, run_from, sample_initial};
    use crate::model::ModelSpec;

    fn ssep(n: u32, a: f64, rho: f64, horizon: f64) -> ModelSpec {
        ModelSpec::new(LocalFunction::constant(1.0), a, n, rho, 32 * n as usize, horizon)
            .unwrap()
    }

    /// Brute-force integral by re-running the event loop with a dense
    /// recompute at every event: the incremental accumulators must agree to
    /// float precision.
    struct BruteLocal {
        g: LocalFunction,
        weights: Vec<f64>,
        integral: f64,
    }
    impl TrajectoryMonitor for BruteLocal {
        fn advance(&mut self, state: &LatticeState, dt: f64) {
            let mut v = 0.0;
            for x in 0..state.len() as i64 {
                let mut pattern = 0usize;
                for (j, &o) in self.g.window.iter().enumerate() {
                    if state.occ_wrapped(x + o as i64) {
                        pattern |= 1 << j;
                    }
                }
                v += self.g.table[pattern] * self.weights[x as usize];
            }
            self.integral += v * dt;
        }
    }

    #[test]
    fn incremental_local_field_matches_brute_force() {
        let spec = ssep(2, 1.0, 0.5, 0.05);
        let g = LocalFunction::new(vec![-1, 0, 1, 2], {
            let mut t = vec![0.0; 16];
            for (i, v) in t.iter_mut().enumerate() {
                *v = (i as f64 * 0.37).sin();
            }
            t
        })
        .unwrap();
        let weights: Vec<f64> = (0..spec.ring_size).map(|x| ((x * 7) % 13) as f64 - 6.0).collect();

        let mut rng = replica_rng(4, 0);
        let init = sample_initial(&spec, &mut rng);

        let ctx = FieldContext::without_transport(&spec);
        let mut obs = ObserverSet::new(ctx, 0);
        obs.integrate_local("g", &g, weights.clone(), 1.0);
        let mut rng1 = replica_rng(4, 1);
        run_from(&spec, init.clone(), &mut rng1, &[0.05], &mut obs).unwrap();
        let fast = obs.into_series()[0].samples[0].1;

        let mut brute = BruteLocal { g, weights, integral: 0.0 };
        let mut rng2 = replica_rng(4, 1);
        run_from(&spec, init, &mut rng2, &[0.05], &mut brute).unwrap();
        assert!(
            (fast - brute.integral).abs() < 1e-8 * (1.0 + brute.integral.abs()),
            "fast {fast} vs brute {}",
            brute.integral
        );
    }

    struct BruteBlock {
        ell: usize,
        rho: f64,
        weights: Vec<f64>,
        integral: f64,
    }
    impl TrajectoryMonitor for BruteBlock {
        fn advance(&mut self, state: &LatticeState, dt: f64) {
            let mut v = 0.0;
            for x in 0..state.len() as i64 {
                let s = block_sum(state, x, self.ell) as f64 / self.ell as f64 - self.rho;
                v += (s * s - self.rho * (1.0 - self.rho) / self.ell as f64)
                    * self.weights[x as usize];
            }
            self.integral += v * dt;
        }
    }

    #[test]
    fn incremental_block_field_matches_brute_force() {
        let spec = ssep(2, 0.5, 0.5, 0.05);
        let weights: Vec<f64> = (0..spec.ring_size).map(|x| (x as f64 * 0.21).cos()).collect();
        let ell = 8usize;

        let mut rng = replica_rng(8, 0);
        let init = sample_initial(&spec, &mut rng);

        let ctx = FieldContext::without_transport(&spec);
        let mut obs = ObserverSet::new(ctx, 0);
        obs.integrate_block_quadratic("q", ell, true, weights.clone());
        let mut rng1 = replica_rng(8, 1);
        run_from(&spec, init.clone(), &mut rng1, &[0.05], &mut obs).unwrap();
        let fast = obs.into_series()[0].samples[0].1;

        let mut brute = BruteBlock { ell, rho: 0.5, weights, integral: 0.0 };
        let mut rng2 = replica_rng(8, 1);
        run_from(&spec, init, &mut rng2, &[0.05], &mut brute).unwrap();
        assert!(
            (fast - brute.integral).abs() < 1e-8 * (1.0 + brute.integral.abs()),
            "fast {fast} vs brute {}",
            brute.integral
        );
    }

    #[test]
    fn jsonl_record_format() {
        let fs = FieldSeries {
            name: "Y".into(),
            test_function: "hermite:0".into(),
            replica: 3,
            samples: vec![(0.5, -1.25)],
        };
        assert_eq!(
            fs.jsonl_records(),
            vec!["{\"replica\":3,\"t\":0.5,\"name\":\"Y\",\"value\":-1.25}".to_string()]
        );
    }
}
