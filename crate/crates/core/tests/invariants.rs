//! Randomized module invariants, 1000 cases each.

mod common;

use proptest::prelude::*;

use common::*;
use crosswalk_core::pomdp::{NUM_ACTIONS, NUM_STATES};

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn model_rows_are_distributions(cfg in arb_model_config(), s in 0..NUM_STATES, a in 0..NUM_ACTIONS) {
        check_model_rows(&cfg, s, a)?;
    }

    #[test]
    fn belief_stays_normalized(seed in any::<u64>(), steps in 1usize..20) {
        check_belief_normalized(seed, steps)?;
    }

    #[test]
    fn tire_force_saturates_and_is_odd(
        slip in -1.5f64..1.5,
        load in 100.0f64..20_000.0,
        stiffness in 1e3f64..3e5,
        friction in 0.1f64..1.5,
    ) {
        check_tire(slip, load, stiffness, friction)?;
    }

    #[test]
    fn vehicle_step_keeps_speed_and_force_balance(
        ux in 0.0f64..15.0,
        uy in -2.0f64..2.0,
        r in -1.0f64..1.0,
        steer in -0.5f64..0.5,
        ax in -8.0f64..4.0,
    ) {
        check_vehicle_step(ux, uy, r, steer, ax)?;
    }

    #[test]
    fn baseline_scale_is_non_increasing(a in 0usize..5000, b in 0usize..5000) {
        check_baseline_monotone(a, b)?;
    }

    #[test]
    fn grid_shadow_and_visibility(seed in any::<u64>()) {
        check_grid(seed)?;
    }

    #[test]
    fn qmdp_policy_properties(seed in any::<u64>(), scale in 1e-3f64..1e3) {
        check_solver(seed, scale)?;
    }

    #[test]
    fn repeated_runs_are_identical(
        policy in arb_policy(),
        placement in arb_placement(),
        desired in 2.0f64..12.0,
        steps in 1usize..=40,
        seed in any::<u64>(),
    ) {
        check_run_determinism(policy, placement, desired, steps, seed)?;
    }
}
