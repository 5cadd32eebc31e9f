//! Acceptance criteria at desk scale (n = 256).
//!
//! `cargo test -p curveflow-core --test acceptance -- --nocapture` prints one
//! PASS/FAIL line per criterion. Each criterion is also its own test.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;
use std::time::Instant;

use curveflow::forcing::expr::{parse_expr, Variable};
use curveflow::{
    classify_monge_ampere, curvature_flow, curve_of, energy_series, evolve, make_grid,
    mode_amplitudes, parse_forcing, solve_steady, step, support_of, CurvatureField,
    CurvatureFlowParams, EnergyParams, EquationType, FlowConfig, ForcingSpec, Grid64,
    MarginMonitor, Pinning, Scheme, SteadyOptions, SupportField, Trajectory64,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const N: usize = 256;

struct Outcome {
    pass: bool,
    detail: String,
}

fn grid() -> Arc<Grid64> {
    make_grid(N).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn run1() -> Trajectory64 {
    let s0 = SupportField::perturbed_circle(grid(), 2.0, 3, 0.1);
    let cfg = FlowConfig::new(1e-4, 0.05).with_scheme(Scheme::Imex2);
    evolve(&s0, &ForcingSpec::zero(), &cfg, &mut []).unwrap()
}

fn run4(spec: &ForcingSpec<f64>, margins: &mut MarginMonitor<f64>) -> Trajectory64 {
    let s0 = SupportField::perturbed_circle(grid(), 2.0, 2, 0.05);
    let cfg = FlowConfig::new(1e-3, 2.0);
    evolve(&s0, spec, &cfg, &mut [margins]).unwrap()
}

fn c1_mode_decay() -> Outcome {
    let start = Instant::now();
    let traj = run1();
    let elapsed = start.elapsed().as_secs_f64();
    let a0 = mode_amplitudes(&traj.states[0]).amplitude(3);
    let a1 = mode_amplitudes(traj.final_state()).amplitude(3);
    let expected = (-64.0f64 * 0.05).exp();
    let err = rel(a1 / a0, expected);
    Outcome {
        pass: traj.termination.is_completed() && err <= 1e-3 && elapsed < 2.0,
        detail: format!(
            "ratio {:.6e} vs {expected:.6e}, rel err {err:.2e}, {elapsed:.2}s",
            a1 / a0
        ),
    }
}

fn c2_neutral_mode() -> Outcome {
    let s0 = SupportField::perturbed_circle(grid(), 2.0, 1, 0.3);
    let cfg = FlowConfig::new(1e-3, 1.0);
    let traj = evolve(&s0, &ForcingSpec::zero(), &cfg, &mut []).unwrap();
    let drift = (mode_amplitudes(traj.final_state()).amplitude(1) - 0.3).abs();
    Outcome {
        pass: traj.termination.is_completed() && drift <= 1e-9,
        detail: format!("k=1 drift {drift:.2e}"),
    }
}

fn c3_constant_mode_ode() -> Outcome {
    let s0 = SupportField::circle(grid(), 2.0);
    let cfg = FlowConfig::new(1e-3, 1.0);
    let traj = evolve(&s0, &ForcingSpec::Proportional(0.5), &cfg, &mut []).unwrap();
    let expected = 2.0 * (-0.5f64).exp();
    let err = traj
        .final_state()
        .values()
        .iter()
        .fold(0.0f64, |m, &v| m.max(rel(v, expected)));
    Outcome {
        pass: traj.termination.is_completed() && err <= 1e-4,
        detail: format!("max rel err {err:.2e}"),
    }
}

fn c4_circle_convergence() -> Outcome {
    let mut margins = MarginMonitor::default();
    let traj = run4(&ForcingSpec::Proportional(1.0), &mut margins);
    let high = mode_amplitudes(traj.final_state()).max_from(2);
    Outcome {
        pass: traj.termination.is_completed() && high <= 1e-6 && margins.min_margin > 1.5,
        detail: format!(
            "max k>=2 amplitude {high:.2e}, min margin {:.4}",
            margins.min_margin
        ),
    }
}

fn c5_collapse_law() -> Outcome {
    let s0 = SupportField::circle(grid(), 1.0);
    let cfg = FlowConfig::new(1e-4, 1.0);
    let traj = evolve(&s0, &ForcingSpec::collapse(0.4).unwrap(), &cfg, &mut []).unwrap();
    let measured = traj.final_state().map(|v| v * v).integral();
    let expected = TAU * (-2.0f64 * 1.4).exp();
    let err = rel(measured, expected);
    Outcome {
        pass: traj.termination.is_completed() && err <= 1e-3,
        detail: format!("int S^2 {measured:.6e} vs {expected:.6e}, rel err {err:.2e}"),
    }
}

/// Largest increase between consecutive recorded energies.
fn worst_rise(traj: &Trajectory64) -> (f64, f64) {
    let params = EnergyParams {
        xi: 0.1,
        grad_weight: 1.0,
    };
    let series = energy_series(traj, &params).unwrap();
    series
        .windows(2)
        .map(|w| (w[1].energy - w[0].energy, w[1].t))
        .fold(
            (f64::NEG_INFINITY, 0.0),
            |acc, x| if x.0 > acc.0 { x } else { acc },
        )
}

fn c6_energy_dissipation() -> Outcome {
    let (rise1, at1) = worst_rise(&run1());
    let (rise4, at4) = worst_rise(&run4(
        &ForcingSpec::Proportional(1.0),
        &mut MarginMonitor::default(),
    ));
    Outcome {
        pass: rise1 <= 1e-10 && rise4 <= 1e-10,
        detail: format!(
            "largest rise: run 1 {rise1:.3e} (t = {at1}), run 4 {rise4:.3e} (t = {at4})"
        ),
    }
}

fn c7_steady_certification() -> Outcome {
    let spec = ForcingSpec::Anisotropic {
        alpha: 0.3,
        beta: 0.1,
    };
    let opts = SteadyOptions::default().with_pinning(Pinning::FixTranslation);
    let init = SupportField::circle(grid(), 2.0);
    let res = match solve_steady(&init, &spec, &opts) {
        Ok(r) => r,
        Err(e) => {
            return Outcome {
                pass: false,
                detail: format!("solver error: {e}"),
            };
        }
    };
    let mut s = res.s_inf.clone();
    let mut drift_ok = true;
    for _ in 0..100 {
        match step(&s, &spec, 1e-3, Scheme::Imex2) {
            Ok(next) => s = next,
            Err(_) => {
                drift_ok = false;
                break;
            }
        }
    }
    let drift = s.max_abs_diff(&res.s_inf);
    Outcome {
        pass: res.converged && res.residual_norm <= 1e-10 && drift_ok && drift <= 1e-8,
        detail: format!(
            "residual {:.2e} in {} iterations, drift {drift:.2e}, non-circularity {:.2e}",
            res.residual_norm,
            res.iterations,
            res.noncircularity()
        ),
    }
}

fn c8_classifier() -> Outcome {
    let cases = [
        (0.5, EquationType::Elliptic, -0.75),
        (1.0, EquationType::Degenerate, 0.0),
        (2.0, EquationType::Hyperbolic, 3.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (r, want, disc) in cases {
        let c = classify_monge_ampere(&SupportField::circle(grid(), r), &ForcingSpec::zero());
        let exact = c.discriminant.values().iter().all(|&d| d == disc);
        let verdicts = c.verdicts.iter().all(|&v| v == want) && c.global == want;
        pass &= exact && verdicts;
        parts.push(format!("S={r}: {:?}", c.global));
    }
    Outcome {
        pass,
        detail: parts.join(", "),
    }
}

fn c9_forcing_bound() -> Outcome {
    let mut margins = MarginMonitor::default();
    let traj = run4(&ForcingSpec::Constant(2.0), &mut margins);
    let mut checked = 0;
    let mut pass = traj.termination.is_completed();
    for (state, rec) in traj.states.iter().zip(&traj.records) {
        let min_gap = state
            .values()
            .iter()
            .fold(f64::INFINITY, |m, &s| m.min(s * s - 1.0));
        if min_gap >= 2.0 {
            checked += 1;
            pass &= rec.forcing_bound_ok;
        }
    }
    pass &= checked > 0;
    Outcome {
        pass,
        detail: format!(
            "{checked} of {} samples satisfy min S^2-1 >= 2, all report ok: {pass}",
            traj.records.len()
        ),
    }
}

fn c10_geometry_roundtrip() -> Outcome {
    let g = grid();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut worst_shift = 0.0f64;
    for _ in 0..100 {
        let modes: Vec<(f64, f64, f64)> = (2..=6)
            .map(|k| {
                let scale = 0.4 / ((k * k - 1) as f64 * 5.0);
                (
                    k as f64,
                    scale * (2.0 * rng.gen::<f64>() - 1.0),
                    scale * (2.0 * rng.gen::<f64>() - 1.0),
                )
            })
            .collect();
        let r = 1.0 + 2.0 * rng.gen::<f64>();
        let (a1, b1) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let s = SupportField::from_fn(g.clone(), |t| {
            r + a1 * t.cos()
                + b1 * t.sin()
                + modes
                    .iter()
                    .map(|(k, a, b)| a * (k * t).cos() + b * (k * t).sin())
                    .sum::<f64>()
        });
        let curve = curve_of(&s);
        let back = support_of(&curve, &g).unwrap();
        worst = worst.max(back.max_abs_diff(&s));

        let (dx, dy) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        let shifted = s.add(&curveflow::Field::from_fn(g.clone(), |t| {
            dx * t.cos() + dy * t.sin()
        }));
        let moved = curve_of(&SupportField::new(shifted));
        let expected = curve.translated(dx, dy);
        for (p, q) in moved.points.iter().zip(&expected.points) {
            worst_shift = worst_shift
                .max((p[0] - q[0]).abs())
                .max((p[1] - q[1]).abs());
        }
    }
    Outcome {
        pass: worst <= 1e-8 && worst_shift <= 1e-10,
        detail: format!("roundtrip max err {worst:.2e}, translation max err {worst_shift:.2e}"),
    }
}

fn c11_curvature_flow() -> Outcome {
    let kappa0 = CurvatureField::new(curveflow::Field::constant(grid(), 0.5));
    let params = CurvatureFlowParams {
        xi: 0.0,
        forcing: ForcingSpec::zero(),
    };
    match curvature_flow(&kappa0, &params, 1e-4, 1.0) {
        Ok(k) => {
            let expected = 0.5 * (-2.0f64).exp();
            let err = k
                .field()
                .values()
                .iter()
                .fold(0.0f64, |m, &v| m.max((v - expected).abs()));
            Outcome {
                pass: err <= 1e-4,
                detail: format!("max abs err {err:.2e}"),
            }
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Well-formed corpus: text, which family it normalizes to, and the direct
/// arithmetic at the probe point (S, S_theta, S_thetatheta, kappa, theta).
type Direct = fn(f64, f64, f64, f64, f64) -> f64;

fn well_formed_corpus() -> Vec<(&'static str, &'static str, Direct)> {
    vec![
        ("1.0*S", "proportional", |s, _, _, _, _| s),
        ("0.5 * S", "proportional", |s, _, _, _, _| 0.5 * s),
        ("-0.4*S", "collapse", |s, _, _, _, _| -0.4 * s),
        ("2", "constant", |_, _, _, _, _| 2.0),
        ("-3.5e-1", "constant", |_, _, _, _, _| -0.35),
        (
            "0.3*kappa^2 + 0.1*S_thetatheta",
            "anisotropic",
            |_, _, stt, k, _| 0.3 * k * k + 0.1 * stt,
        ),
        ("S^2 - 1", "expression", |s, _, _, _, _| s * s - 1.0),
        ("S*S*S", "expression", |s, _, _, _, _| s * s * s),
        ("(S + 1)/(S - 1)", "expression", |s, _, _, _, _| {
            (s + 1.0) / (s - 1.0)
        }),
        ("2 - 3 - 4", "expression", |_, _, _, _, _| 2.0 - 3.0 - 4.0),
        ("9 / 4 / 3", "expression", |_, _, _, _, _| 9.0 / 4.0 / 3.0),
        ("-S^2", "expression", |s, _, _, _, _| (-s) * (-s)),
        ("kappa^-2", "expression", |_, _, _, k, _| 1.0 / (k * k)),
        (
            "cos(theta)*S + sin(theta)",
            "expression",
            |s, _, _, _, t| t.cos() * s + t.sin(),
        ),
        (
            "S_theta^2 + S_thetatheta",
            "expression",
            |_, st, stt, _, _| st * st + stt,
        ),
        ("theta/6.5", "expression", |_, _, _, _, t| t / 6.5),
        ("((S))", "expression", |s, _, _, _, _| s),
        ("1 + 2*S - S^3/4", "expression", |s, _, _, _, _| {
            1.0 + 2.0 * s - s * s * s / 4.0
        }),
        ("0.2*kappa*S_theta", "expression", |_, st, _, k, _| {
            0.2 * k * st
        }),
        ("1e-3*(S - 2)^2", "expression", |s, _, _, _, _| {
            1e-3 * (s - 2.0) * (s - 2.0)
        }),
    ]
}

const MALFORMED: [&str; 10] = [
    "S +", "", "(S", "S)", "2**S", "foo*S", "S^", "S^1.5", "sin(S)", "3 4",
];

fn c12_parser_suite() -> Outcome {
    let (s, st, stt, k, t) = (1.7, -0.3, 0.45, 0.8, 1.1);
    let lookup = |v: Variable| {
        use Variable::*;
        match v {
            S => s,
            STheta => st,
            SThetaTheta => stt,
            Kappa => k,
            Theta => t,
            SinTheta => f64::sin(t),
            CosTheta => f64::cos(t),
        }
    };
    let mut failures = Vec::new();
    let corpus = well_formed_corpus();
    for (text, family, direct) in &corpus {
        let spec: ForcingSpec<f64> = match parse_forcing(text) {
            Ok(spec) => spec,
            Err(e) => {
                failures.push(format!("{text:?}: {e}"));
                continue;
            }
        };
        let got_family = match spec {
            ForcingSpec::Constant(_) => "constant",
            ForcingSpec::Proportional(_) => "proportional",
            ForcingSpec::Collapse { .. } => "collapse",
            ForcingSpec::Anisotropic { .. } => "anisotropic",
            ForcingSpec::Expression(_) => "expression",
        };
        if got_family != *family {
            failures.push(format!("{text:?} normalized to {got_family}"));
        }
        let value = parse_expr::<f64>(text).unwrap().eval(&lookup);
        let want = direct(s, st, stt, k, t);
        if (value - want).abs() > 1e-12 * want.abs().max(1.0) {
            failures.push(format!("{text:?}: {value} vs {want}"));
        }
    }
    for text in MALFORMED {
        if parse_forcing::<f64>(text).is_ok() {
            failures.push(format!("{text:?} accepted"));
        }
    }
    let total = corpus.len() + MALFORMED.len();
    Outcome {
        pass: failures.is_empty() && total == 30,
        detail: if failures.is_empty() {
            format!("{total} cases")
        } else {
            failures.join("; ")
        },
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 12] = [
    ("1 linear mode decay", c1_mode_decay),
    ("2 neutral mode exactness", c2_neutral_mode),
    ("3 constant-mode forcing ODE", c3_constant_mode_ode),
    ("4 circle convergence at c = 1", c4_circle_convergence),
    ("5 collapse law", c5_collapse_law),
    ("6 energy dissipation", c6_energy_dissipation),
    ("7 steady solver certification", c7_steady_certification),
    ("8 Monge-Ampere classifier", c8_classifier),
    ("9 forcing bound monitor", c9_forcing_bound),
    ("10 geometry roundtrip", c10_geometry_roundtrip),
    ("11 curvature gradient flow", c11_curvature_flow),
    ("12 parser suite", c12_parser_suite),
];

#[test]
fn summary() {
    let mut failed = Vec::new();
    for (name, check) in CRITERIA {
        let out = check();
        println!(
            "{} {name}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            out.detail
        );
        if !out.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

macro_rules! criterion_test {
    ($name:ident, $check:ident) => {
        #[test]
        fn $name() {
            let out = $check();
            assert!(out.pass, "{}", out.detail);
        }
    };
}

criterion_test!(criterion_01, c1_mode_decay);
criterion_test!(criterion_02, c2_neutral_mode);
criterion_test!(criterion_03, c3_constant_mode_ode);
criterion_test!(criterion_04, c4_circle_convergence);
criterion_test!(criterion_05, c5_collapse_law);
criterion_test!(criterion_06, c6_energy_dissipation);
criterion_test!(criterion_07, c7_steady_certification);
criterion_test!(criterion_08, c8_classifier);
criterion_test!(criterion_09, c9_forcing_bound);
criterion_test!(criterion_10, c10_geometry_roundtrip);
criterion_test!(criterion_11, c11_curvature_flow);
criterion_test!(criterion_12, c12_parser_suite);

#[test]
fn collapse_area_matches_pi_r_squared() {
    let s0 = SupportField::circle(grid(), 1.0);
    assert!((curveflow::area_of(&s0).unwrap() - PI).abs() < 1e-12);
}
