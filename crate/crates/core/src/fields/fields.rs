//! Point-in-time fluctuation fields of a configuration.

use crate::engine::state::LatticeState;
use crate::fields::calculus::RingGeometry;
use crate::fields::testfn::TestFunction;
use crate::model::ModelSpec;
use crate::thermo::TransportCoefficients;

/// Shared evaluation context: geometry, density and transport constants.
#[derive(Debug, Clone)]
pub struct FieldContext {
    pub geom: RingGeometry,
    pub rho: f64,
    pub scale: u32,
    /// Flux `H(rho) = a chi D`; centers the current and height fields.
    pub flux: f64,
    /// Fluctuation velocity in site units per unit time: `n^{3/2} H'(rho)`.
    pub frame_velocity: f64,
}

impl FieldContext {
    pub fn new(spec: &ModelSpec, tc: &TransportCoefficients) -> Self {
        let n = spec.scale as f64;
        FieldContext {
            geom: RingGeometry::new(spec.scale, spec.ring_size),
            rho: spec.density,
            scale: spec.scale,
            flux: tc.flux,
            frame_velocity: n.powf(1.5) * tc.flux_prime,
        }
    }

    /// Context for symmetric experiments where no gradient witness is
    /// needed: flux terms vanish at `a = 0` or are supplied later.
    pub fn without_transport(spec: &ModelSpec) -> Self {
        FieldContext {
            geom: RingGeometry::new(spec.scale, spec.ring_size),
            rho: spec.density,
            scale: spec.scale,
            flux: 0.0,
            frame_velocity: 0.0,
        }
    }

    /// Density fluctuation field
    /// `Y_t(u) = n^{-1/2} sum_x (eta(x) - rho) u((x - v t)/n)`.
    pub fn density_field(&self, state: &LatticeState, u: &TestFunction) -> f64 {
        let n = self.scale as f64;
        let frame = self.frame_velocity * state.clock;
        let mut acc = 0.0;
        for x in 0..state.len() {
            let occ = state.occ(x) as i64 as f64;
            acc += (occ - self.rho) * u.eval(self.geom.coord_with_frame(x as i64, frame));
        }
        acc / n.sqrt()
    }

    /// Current fluctuation field
    /// `J_t(u) = n^{-3/2} sum_x (J_x(t) - n^{3/2} H(rho) t) u(x/n)`.
    pub fn current_field(&self, state: &LatticeState, u: &TestFunction) -> f64 {
        let n = self.scale as f64;
        let centering = n.powf(1.5) * self.flux * state.clock;
        let mut acc = 0.0;
        for x in 0..state.len() {
            acc += (state.currents[x] as f64 - centering) * u.eval(self.geom.coord(x as i64));
        }
        acc / n.powf(1.5)
    }

    /// Block density `eta^l(x) = (1/l) sum_{i=1..l} eta(x+i)`.
    pub fn block_average(&self, state: &LatticeState, x: i64, ell: usize) -> f64 {
        block_sum(state, x, ell) as f64 / ell as f64
    }

    /// Quadratic block functional `Q_rho(l; x) = (eta^l(x) - rho)^2 - chi/l`.
    pub fn quadratic_q(&self, state: &LatticeState, x: i64, ell: usize) -> f64 {
        let d = self.block_average(state, x, ell) - self.rho;
        d * d - self.rho * (1.0 - self.rho) / ell as f64
    }

    /// `Y(i_eps(x/n))`, the block-kernel density field: `sqrt(n) (eta^l - rho)`
    /// with `l = eps n` sites.
    pub fn block_field(&self, state: &LatticeState, x: i64, ell: usize) -> f64 {
        (self.scale as f64).sqrt() * (self.block_average(state, x, ell) - self.rho)
    }
}

pub(crate) fn block_sum(state: &LatticeState, x: i64, ell: usize) -> i64 {
    (1..=ell as i64).filter(|&i| state.occ_wrapped(x + i)).count() as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local_fn::LocalFunction;

    fn ctx(n: u32, rho: f64) -> (FieldContext, ModelSpec) {
        let spec =
            ModelSpec::new(LocalFunction::constant(1.0), 0.0, n, rho, 32 * n as usize, 1.0)
                .unwrap();
        (FieldContext::without_transport(&spec), spec)
    }

    #[test]
    fn single_occupied_site_gives_one_term() {
        let (ctx, spec) = ctx(16, 0.0);
        let mut occ = vec![false; spec.ring_size];
        occ[0] = true;
        let state = LatticeState::new(occ);
        let u = TestFunction::hermite(0);
        let want = u.eval(0.0) / (16f64).sqrt();
        assert!((ctx.density_field(&state, &u) - want).abs() < 1e-12);
    }

    #[test]
    fn current_field_zero_at_time_zero() {
        let (ctx, spec) = ctx(8, 0.5);
        let state = LatticeState::new(vec![false; spec.ring_size]);
        let u = TestFunction::hermite(1);
        assert_eq!(ctx.current_field(&state, &u), 0.0);
    }

    #[test]
    fn quadratic_block_example() {
        // l = 2, eta(1) = eta(2) = 1, rho = 1/2: Q = 1/4 - 1/8 = 1/8.
        let (ctx, spec) = ctx(4, 0.5);
        let mut occ = vec![false; spec.ring_size];
        occ[1] = true;
        occ[2] = true;
        let state = LatticeState::new(occ);
        assert!((ctx.quadratic_q(&state, 0, 2) - 0.125).abs() < 1e-15);
        assert_eq!(ctx.block_average(&state, 0, 2), 1.0);
    }

    #[test]
    fn block_identity_n_q_equals_y_squared_minus_chi_over_eps() {
        // n Q_rho(eps n) = Y(i_eps)^2 - chi/eps, exactly, on random states.
        let (ctx, spec) = ctx(16, 0.25);
        let mut rng = crate::engine::replica_rng(3, 0);
        let state = crate::engine::sample_initial(&spec, &mut rng);
        let n = spec.scale as f64;
        for (eps_num, eps_den) in [(1i64, 4i64), (1, 2), (1, 1)] {
            let eps = eps_num as f64 / eps_den as f64;
            let ell = (eps * n).round() as usize;
            for x in [-5i64, 0, 31] {
                let lhs = n * ctx.quadratic_q(&state, x, ell);
                let y = ctx.block_field(&state, x, ell);
                let rhs = y * y - ctx.rho * (1.0 - ctx.rho) / eps;
                assert!((lhs - rhs).abs() < 1e-9, "eps={eps} x={x}");
            }
        }
    }

    #[test]
    fn fields_are_linear_in_u() {
        let (ctx, spec) = ctx(8, 0.5);
        let mut rng = crate::engine::replica_rng(9, 1);
        let state = crate::engine::sample_initial(&spec, &mut rng);
        let u = TestFunction::hermite(0);
        let v = TestFunction::hermite(3);
        let combo = TestFunction::combination(2.5, u.clone(), -1.5, v.clone());
        let lhs = ctx.density_field(&state, &combo);
        let rhs = 2.5 * ctx.density_field(&state, &u) - 1.5 * ctx.density_field(&state, &v);
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
