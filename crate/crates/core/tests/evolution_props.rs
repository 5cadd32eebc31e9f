mod common;

use common::{convex_shape, grid};
use curveflow::{
    energy_series, evolve, mode_amplitudes, EnergyParams, FlowConfig, ForcingSpec, MarginMonitor,
    Scheme, SupportField,
};
use proptest::prelude::*;

/// Error at `t = 1` against `S(t) = 2e^{-t/2}` for `F = S/2` from `S ≡ 2`.
fn constant_mode_error(dt: f64, scheme: Scheme) -> f64 {
    let s0 = SupportField::circle(grid(16), 2.0);
    let cfg = FlowConfig::new(dt, 1.0).with_scheme(scheme);
    let traj = evolve(&s0, &ForcingSpec::Proportional(0.5), &cfg, &mut []).unwrap();
    let exact = 2.0 * (-0.5f64).exp();
    traj.final_state()
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max((v - exact).abs()))
}

#[test]
fn imex1_is_first_order() {
    let ratio = constant_mode_error(2e-2, Scheme::Imex1) / constant_mode_error(1e-2, Scheme::Imex1);
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn imex2_is_second_order() {
    let ratio = constant_mode_error(2e-2, Scheme::Imex2) / constant_mode_error(1e-2, Scheme::Imex2);
    assert!((3.6..4.4).contains(&ratio), "ratio {ratio}");
}

#[test]
fn collapse_integral_follows_exponential_law() {
    for (r, beta) in [(0.7, 0.2), (1.5, 1.0), (3.0, 0.05)] {
        let s0 = SupportField::circle(grid(16), r);
        let cfg = FlowConfig::new(1e-4, 1.0);
        let traj = evolve(&s0, &ForcingSpec::collapse(beta).unwrap(), &cfg, &mut []).unwrap();
        let measured = traj.final_state().map(|v| v * v).integral();
        let expected = std::f64::consts::TAU * r * r * (-2.0 * (1.0 + beta)).exp();
        assert!(((measured - expected) / expected).abs() <= 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn free_modes_decay_at_their_symbol(shape in convex_shape(4)) {
        let g = grid(32);
        let s0 = shape.support(&g);
        let cfg = FlowConfig::new(1e-4, 0.1).with_scheme(Scheme::Imex2);
        let traj = evolve(&s0, &ForcingSpec::zero(), &cfg, &mut []).unwrap();
        prop_assert!(traj.termination.is_completed());
        let (before, after) = (mode_amplitudes(&s0), mode_amplitudes(traj.final_state()));
        for k in 0..=4usize {
            let rate = ((k * k) as f64 - 1.0).powi(2);
            let expected = before.amplitude(k).abs() * (-rate * 0.1).exp();
            // Below this the amplitude is rounding noise.
            if expected >= 1e-9 {
                let err = (after.amplitude(k).abs() - expected).abs() / expected;
                prop_assert!(err <= 1e-3, "k = {}: rel err {}", k, err);
            }
        }
    }

    #[test]
    fn monotone_forcing_keeps_curves_convex(
        shape in convex_shape(4),
        spec in prop_oneof![
            (0.0..=1.0f64).prop_map(ForcingSpec::Proportional),
            (0.1..3.0f64).prop_map(ForcingSpec::Constant),
        ],
    ) {
        let g = grid(32);
        let s0 = shape.support(&g);
        let steady_margin = match spec {
            ForcingSpec::Proportional(1.0) => shape.r,
            ForcingSpec::Proportional(_) => 0.0,
            ForcingSpec::Constant(a) => a,
            _ => unreachable!(),
        };
        let initial = curveflow::convexity_margin(&s0);
        let mut margins = MarginMonitor::default();
        let cfg = FlowConfig::new(1e-3, 1.0);
        let traj = evolve(&s0, &spec, &cfg, &mut [&mut margins]).unwrap();
        prop_assert!(traj.termination.is_completed());
        prop_assert!(margins.min_margin >= initial.min(steady_margin) - 1e-6,
            "min margin {} at t = {}, initial {}, steady {}", margins.min_margin, margins.at, initial, steady_margin);
    }

    #[test]
    fn energy_decreases_toward_the_circle(shape in convex_shape(4)) {
        let g = grid(32);
        let cfg = FlowConfig::new(1e-3, 1.0).with_record_every(20);
        let traj = evolve(&shape.support(&g), &ForcingSpec::Proportional(1.0), &cfg, &mut []).unwrap();
        let series = energy_series(&traj, &EnergyParams::default()).unwrap();
        for w in series.windows(2) {
            prop_assert!(w[1].energy <= w[0].energy + 1e-10, "rise at t = {}", w[1].t);
        }
    }
}
