//! Property-based invariants: locality, serialization round trips, field
//! linearity and the schedule's prefix-sum structure.

use proptest::prelude::*;
use simlab_core::engine::state::LatticeState;
use simlab_core::engine::{replica_rng, sample_initial};
use simlab_core::fields::{FieldContext, TestFunction};
use simlab_core::local_fn::LocalFunction;
use simlab_core::model::ModelSpec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rle_round_trips(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
        let state = LatticeState::new(bits.clone());
        let code = state.occupancy_rle();
        let back = LatticeState::from_rle(&code).unwrap();
        prop_assert_eq!(back.occupancy, bits);
    }

    #[test]
    fn local_function_ignores_sites_outside_window(
        table in proptest::collection::vec(-10.0f64..10.0, 8),
        pattern in 0usize..256,
        flips in proptest::collection::vec(-20i32..20, 1..6),
    ) {
        let f = LocalFunction::new(vec![-2, 1, 5], table).unwrap();
        let occ = |o: i32| -> bool {
            let idx = (o + 8).rem_euclid(16) as usize;
            pattern & (1 << (idx % 8)) != 0
        };
        let base = f.eval_with(occ);
        for &flip in &flips {
            if f.window.contains(&flip) {
                continue;
            }
            let flipped = |o: i32| if o == flip { !occ(o) } else { occ(o) };
            prop_assert_eq!(base, f.eval_with(flipped));
        }
    }

    #[test]
    fn fields_are_linear_in_the_test_function(
        seed in 0u64..500,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let spec = ModelSpec::new(LocalFunction::constant(1.0), 0.0, 8, 0.5, 256, 1.0).unwrap();
        let ctx = FieldContext::without_transport(&spec);
        let mut rng = replica_rng(seed, 0);
        let state = sample_initial(&spec, &mut rng);
        let u = TestFunction::hermite(0);
        let v = TestFunction::hermite(3);
        let combo = TestFunction::combination(a, u.clone(), b, v.clone());
        let lhs = ctx.density_field(&state, &combo);
        let rhs = a * ctx.density_field(&state, &u) + b * ctx.density_field(&state, &v);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn block_identity_on_random_states(seed in 0u64..500, x in -64i64..64) {
        // n Q_rho(eps n; eta) = Y(i_eps)^2 - chi/eps, exactly.
        let spec = ModelSpec::new(LocalFunction::constant(1.0), 0.0, 16, 0.25, 512, 1.0).unwrap();
        let ctx = FieldContext::without_transport(&spec);
        let mut rng = replica_rng(seed, 1);
        let state = sample_initial(&spec, &mut rng);
        let n = 16.0;
        for ell in [4usize, 8, 16] {
            let eps = ell as f64 / n;
            let lhs = n * ctx.quadratic_q(&state, x, ell);
            let y = ctx.block_field(&state, x, ell);
            let rhs = y * y - 0.25 * 0.75 / eps;
            prop_assert!((lhs - rhs).abs() < 1e-9);
        }
    }

    #[test]
    fn config_json_round_trip(seed in any::<u64>(), reps in 1u64..1000) {
        use simlab_core::harness::{ExperimentConfig, Grids, ModelConfig, SpdeConfig};
        let cfg = ExperimentConfig {
            schema: 1,
            experiment: "whitenoise".into(),
            model: ModelConfig {
                rate: LocalFunction::constant(1.0),
                asymmetry: 1.0,
                scale: 4,
                density: 0.5,
                ring_mult: 32,
                horizon: 0.1,
            },
            test_functions: vec!["hermite:0".into()],
            grids: Grids::default(),
            spde: SpdeConfig::default(),
            replicas: reps,
            master_seed: seed,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        prop_assert_eq!(back.master_seed, seed);
        prop_assert_eq!(back.config_hash(), cfg.config_hash());
    }
}
