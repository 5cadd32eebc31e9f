//! Time integration of `∂ₜS = -(S_θθθθ + 2S_θθ + S) + F(S)`.
//!
//! The constant-coefficient operator is diagonal in Fourier space with symbol
//! `-(k²-1)²` and is treated implicitly per mode; the forcing is explicit.
//! A `β·S_θθ` term in the anisotropic forcing is folded into the implicit
//! symbol as `-β·k²`.

use std::fmt;

use num_complex::Complex;

use crate::diagnostics::{DiagnosticsRecord, EnergyParams};
use crate::error::{FlowError, Result};
use crate::forcing::{check_forcing_bound, eval_forcing, ForcingContext, ForcingSpec};
use crate::geometry::{convexity_margin, CurvatureField, SupportField};
use crate::grid::{differentiate, linear_symbol, Field};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Backward Euler on the linear part, forward Euler on the forcing.
    Imex1,
    /// Crank–Nicolson on the linear part, forcing evaluated at a predicted
    /// half-step state.
    #[default]
    Imex2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ConvexityPolicy {
    #[default]
    Abort,
    Warn,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig<T: Scalar> {
    pub dt: T,
    pub t_end: T,
    pub scheme: Scheme,
    /// Steps between recorded samples; the initial and final states are
    /// always recorded.
    pub record_every: usize,
    pub convexity_policy: ConvexityPolicy,
    pub energy: EnergyParams<T>,
}

impl<T: Scalar> FlowConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        Self {
            dt,
            t_end,
            scheme: Scheme::default(),
            record_every: 100,
            convexity_policy: ConvexityPolicy::default(),
            energy: EnergyParams::default(),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_policy(mut self, policy: ConvexityPolicy) -> Self {
        self.convexity_policy = policy;
        self
    }

    pub fn with_energy(mut self, energy: EnergyParams<T>) -> Self {
        self.energy = energy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(FlowError::InvalidArgument(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return Err(FlowError::InvalidArgument(format!(
                "t_end must be finite and non-negative, got {}",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(FlowError::InvalidArgument(
                "record_every must be at least 1".into(),
            ));
        }
        self.energy.validate()
    }

    /// Number of steps needed to reach `t_end`; the last step may be shorter.
    pub fn step_count(&self) -> usize {
        let ratio = (self.t_end / self.dt).as_f64();
        (ratio - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination<T: Scalar> {
    Completed,
    ConvexityLost {
        t: T,
    },
    Blowup {
        t: T,
    },
    /// A monitor asked to stop.
    Stopped {
        t: T,
    },
}

impl<T: Scalar> Termination<T> {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

impl<T: Scalar> fmt::Display for Termination<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Completed => f.write_str("completed"),
            Termination::ConvexityLost { t } => write!(f, "convexity lost at t = {t}"),
            Termination::Blowup { t } => write!(f, "non-finite state at t = {t}"),
            Termination::Stopped { t } => write!(f, "stopped by monitor at t = {t}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Scalar> {
    pub times: Vec<T>,
    pub states: Vec<SupportField<T>>,
    pub records: Vec<DiagnosticsRecord<T>>,
    pub termination: Termination<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn final_state(&self) -> &SupportField<T> {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_record(&self) -> &DiagnosticsRecord<T> {
        self.records
            .last()
            .expect("trajectory holds the initial record")
    }

    fn push(&mut self, t: T, s: &SupportField<T>, spec: &ForcingSpec<T>, energy: &EnergyParams<T>) {
        if self.times.last().is_some_and(|&last| last >= t) {
            return;
        }
        self.times.push(t);
        self.states.push(s.clone());
        self.records
            .push(DiagnosticsRecord::compute(t, s, spec, energy));
    }
}

pub enum MonitorAction {
    Continue,
    Stop,
}

/// Observer invoked on the initial state and after every accepted step.
pub trait StepMonitor<T: Scalar> {
    fn observe(&mut self, step: usize, t: T, state: &SupportField<T>) -> MonitorAction;
}

impl<T: Scalar, F> StepMonitor<T> for F
where
    F: FnMut(usize, T, &SupportField<T>) -> MonitorAction,
{
    fn observe(&mut self, step: usize, t: T, state: &SupportField<T>) -> MonitorAction {
        self(step, t, state)
    }
}

/// Checks `0 < F ≤ S² − 1` at every step and remembers the first violation.
#[derive(Clone, Debug)]
pub struct ForcingBoundMonitor<T: Scalar> {
    spec: ForcingSpec<T>,
    pub first_violation: Option<T>,
    pub checks: usize,
}

impl<T: Scalar> ForcingBoundMonitor<T> {
    pub fn new(spec: ForcingSpec<T>) -> Self {
        Self {
            spec,
            first_violation: None,
            checks: 0,
        }
    }
}

impl<T: Scalar> StepMonitor<T> for ForcingBoundMonitor<T> {
    fn observe(&mut self, _step: usize, t: T, state: &SupportField<T>) -> MonitorAction {
        self.checks += 1;
        let ok = check_forcing_bound(&self.spec, state)
            .map(|r| r.passed)
            .unwrap_or(false);
        if !ok && self.first_violation.is_none() {
            self.first_violation = Some(t);
        }
        MonitorAction::Continue
    }
}

/// Tracks the smallest convexity margin seen at any step.
#[derive(Clone, Debug)]
pub struct MarginMonitor<T: Scalar> {
    pub min_margin: T,
    pub at: T,
}

impl<T: Scalar> Default for MarginMonitor<T> {
    fn default() -> Self {
        Self {
            min_margin: T::infinity(),
            at: T::zero(),
        }
    }
}

impl<T: Scalar> StepMonitor<T> for MarginMonitor<T> {
    fn observe(&mut self, _step: usize, t: T, state: &SupportField<T>) -> MonitorAction {
        let m = convexity_margin(state);
        if m < self.min_margin {
            self.min_margin = m;
            self.at = t;
        }
        MonitorAction::Continue
    }
}

/// Splits `spec` into the implicit `β·S_θθ` weight and the explicit remainder.
fn split_forcing<T: Scalar>(spec: &ForcingSpec<T>) -> (T, ForcingSpec<T>) {
    match spec.implicit_second_derivative_weight() {
        Some(beta) => {
            let explicit = match spec {
                ForcingSpec::Anisotropic { alpha, .. } => ForcingSpec::Anisotropic {
                    alpha: *alpha,
                    beta: T::zero(),
                },
                other => other.clone(),
            };
            (beta, explicit)
        }
        None => (T::zero(), spec.clone()),
    }
}

fn explicit_coeffs<T: Scalar>(
    spec: &ForcingSpec<T>,
    s: &SupportField<T>,
) -> Result<Vec<Complex<T>>> {
    let ctx = ForcingContext::for_spec(spec, s)?;
    let f = eval_forcing(spec, &ctx)?;
    Ok(s.grid().forward(f.values()))
}

/// Advances `s` by one time step of length `dt`.
///
/// A non-finite result is reported as [`FlowError::Blowup`] with `t`
/// measured from the input state.
pub fn step<T: Scalar>(
    s: &SupportField<T>,
    spec: &ForcingSpec<T>,
    dt: T,
    scheme: Scheme,
) -> Result<SupportField<T>> {
    if !(dt > T::zero()) {
        return Err(FlowError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    spec.validate()?;
    let (beta, explicit) = split_forcing(spec);
    let grid = s.grid().clone();
    let symbol = |bin: usize| -> T {
        let k = grid.wavenumber(bin);
        linear_symbol::<T>(k) - beta * T::from_i64(k * k).unwrap()
    };
    let s_hat = grid.forward(s.values());
    let n_hat = explicit_coeffs(&explicit, s)?;
    let half = T::lit(0.5);

    let next_hat: Vec<Complex<T>> = match scheme {
        Scheme::Imex1 => s_hat
            .iter()
            .zip(&n_hat)
            .enumerate()
            .map(|(bin, (&sh, &nh))| (sh + nh * dt) / (T::one() - dt * symbol(bin)))
            .collect(),
        Scheme::Imex2 => {
            let h = dt * half;
            let predictor: Vec<Complex<T>> = s_hat
                .iter()
                .zip(&n_hat)
                .enumerate()
                .map(|(bin, (&sh, &nh))| (sh + nh * h) / (T::one() - h * symbol(bin)))
                .collect();
            let mid = SupportField::new(Field::from_raw(grid.clone(), grid.inverse(predictor)));
            if !mid.is_finite() {
                return Err(FlowError::Blowup { t: h.as_f64() });
            }
            let mid_hat = explicit_coeffs(&explicit, &mid)?;
            s_hat
                .iter()
                .zip(&mid_hat)
                .enumerate()
                .map(|(bin, (&sh, &nh))| {
                    let lam = symbol(bin);
                    (sh * (T::one() + h * lam) + nh * dt) / (T::one() - h * lam)
                })
                .collect()
        }
    };
    let next = SupportField::new(Field::from_raw(grid.clone(), grid.inverse(next_hat)));
    if !next.is_finite() {
        return Err(FlowError::Blowup { t: dt.as_f64() });
    }
    Ok(next)
}

/// Integrates from `s0` to `cfg.t_end`, recording diagnostics every
/// `cfg.record_every` steps.
///
/// Numerical failures end the run early and are reported through
/// [`Trajectory::termination`]; only an invalid configuration is an error.
pub fn evolve<T: Scalar>(
    s0: &SupportField<T>,
    spec: &ForcingSpec<T>,
    cfg: &FlowConfig<T>,
    monitors: &mut [&mut dyn StepMonitor<T>],
) -> Result<Trajectory<T>> {
    cfg.validate()?;
    spec.validate()?;
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        records: Vec::new(),
        termination: Termination::Completed,
    };
    traj.push(T::zero(), s0, spec, &cfg.energy);
    if !s0.is_finite() {
        traj.termination = Termination::Blowup { t: T::zero() };
        return Ok(traj);
    }
    if cfg.convexity_policy == ConvexityPolicy::Abort && !(convexity_margin(s0) > T::zero()) {
        traj.termination = Termination::ConvexityLost { t: T::zero() };
        return Ok(traj);
    }
    for m in monitors.iter_mut() {
        if let MonitorAction::Stop = m.observe(0, T::zero(), s0) {
            traj.termination = Termination::Stopped { t: T::zero() };
            return Ok(traj);
        }
    }

    let steps = cfg.step_count();
    let mut state = s0.clone();
    let mut warned = false;
    for i in 1..=steps {
        let t_prev = cfg.dt * T::from_usize_lossy(i - 1);
        let t = if i == steps {
            cfg.t_end
        } else {
            cfg.dt * T::from_usize_lossy(i)
        };
        let h = t - t_prev;
        match step(&state, spec, h, cfg.scheme) {
            Ok(next) => state = next,
            Err(FlowError::DegenerateCurvature { .. }) => {
                traj.push(t_prev, &state, spec, &cfg.energy);
                traj.termination = Termination::ConvexityLost { t: t_prev };
                return Ok(traj);
            }
            Err(_) => {
                traj.push(t_prev, &state, spec, &cfg.energy);
                traj.termination = Termination::Blowup { t };
                return Ok(traj);
            }
        }
        let margin = convexity_margin(&state);
        if !(margin > T::zero()) {
            match cfg.convexity_policy {
                ConvexityPolicy::Abort => {
                    traj.push(t, &state, spec, &cfg.energy);
                    traj.termination = Termination::ConvexityLost { t };
                    return Ok(traj);
                }
                ConvexityPolicy::Warn if !warned => {
                    log::warn!("convexity lost at t = {t} (margin {margin}); continuing");
                    warned = true;
                }
                ConvexityPolicy::Warn => {}
            }
        }
        let mut stop = false;
        for m in monitors.iter_mut() {
            if let MonitorAction::Stop = m.observe(i, t, &state) {
                stop = true;
            }
        }
        if stop {
            traj.push(t, &state, spec, &cfg.energy);
            traj.termination = Termination::Stopped { t };
            return Ok(traj);
        }
        if i % cfg.record_every == 0 || i == steps {
            traj.push(t, &state, spec, &cfg.energy);
        }
    }
    Ok(traj)
}

/// Parameters of the curvature-intrinsic gradient flow
/// `∂κ/∂t = -(2κ - κ_ss + 4ξκ³) + F`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureFlowParams<T: Scalar> {
    pub xi: T,
    pub forcing: ForcingSpec<T>,
}

/// Right-hand side of the curvature flow. On the normal-angle grid
/// `∂_s = κ ∂_θ`, so `κ_ss = κ·(κ·κ_θ)_θ`.
pub fn curvature_flow_rhs<T: Scalar>(
    kappa: &CurvatureField<T>,
    params: &CurvatureFlowParams<T>,
) -> Result<Field<T>> {
    let k = kappa.field();
    let k_s = k.zip_with(&differentiate(k, 1)?, |a, b| a * b);
    let k_ss = k.zip_with(&differentiate(&k_s, 1)?, |a, b| a * b);
    let ctx = ForcingContext::from_curvature(k.clone());
    let f = eval_forcing(&params.forcing, &ctx)?;
    let two = T::lit(2.0);
    let four_xi = T::lit(4.0) * params.xi;
    let grad = k.zip_with(&k_ss, |kv, kss| two * kv - kss + four_xi * kv * kv * kv);
    Ok(f.sub(&grad))
}

/// One forward-Euler step of the curvature flow.
pub fn curvature_flow_step<T: Scalar>(
    kappa: &CurvatureField<T>,
    params: &CurvatureFlowParams<T>,
    dt: T,
) -> Result<CurvatureField<T>> {
    if !(dt > T::zero()) {
        return Err(FlowError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    if !(params.xi >= T::zero()) {
        return Err(FlowError::InvalidArgument(format!(
            "xi must be non-negative, got {}",
            params.xi
        )));
    }
    let rhs = curvature_flow_rhs(kappa, params)?;
    let next = kappa.field().axpby(T::one(), &rhs, dt);
    let (min, index) = next.min_with_index();
    if !(min > T::zero()) {
        return Err(FlowError::DegenerateCurvature {
            margin: min.as_f64(),
            index,
            theta: next.grid().theta()[index].as_f64(),
        });
    }
    Ok(CurvatureField::new(next))
}

/// Repeats [`curvature_flow_step`] until `t_end`, shortening the last step.
pub fn curvature_flow<T: Scalar>(
    kappa0: &CurvatureField<T>,
    params: &CurvatureFlowParams<T>,
    dt: T,
    t_end: T,
) -> Result<CurvatureField<T>> {
    let cfg = FlowConfig::new(dt, t_end);
    cfg.validate()?;
    let steps = cfg.step_count();
    let mut kappa = kappa0.clone();
    for i in 1..=steps {
        let t_prev = dt * T::from_usize_lossy(i - 1);
        let t = if i == steps {
            t_end
        } else {
            dt * T::from_usize_lossy(i)
        };
        kappa = curvature_flow_step(&kappa, params, t - t_prev)?;
    }
    Ok(kappa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, mode_amplitudes};
    use approx::assert_relative_eq;

    #[test]
    fn constant_mode_backward_euler() {
        let g = make_grid::<f64>(32).unwrap();
        let s = SupportField::circle(g, 2.0);
        let dt = 0.01;
        let next = step(&s, &ForcingSpec::zero(), dt, Scheme::Imex1).unwrap();
        assert!(next
            .values()
            .iter()
            .all(|&v| (v - 2.0 / (1.0 + dt)).abs() < 1e-15));
    }

    #[test]
    fn translation_mode_is_neutral() {
        let g = make_grid::<f64>(32).unwrap();
        let s = SupportField::from_fn(g, f64::cos);
        for scheme in [Scheme::Imex1, Scheme::Imex2] {
            for dt in [1e-4, 0.1, 10.0] {
                let next = step(&s, &ForcingSpec::zero(), dt, scheme).unwrap();
                assert!(next.max_abs_diff(&s) < 1e-14);
            }
        }
    }

    #[test]
    fn mode_three_decay() {
        let g = make_grid::<f64>(64).unwrap();
        let s0 = SupportField::from_fn(g, |t| 2.0 + 0.1 * (3.0 * t).cos());
        let cfg = FlowConfig::new(1e-5, 0.05).with_record_every(1000);
        let traj = evolve(&s0, &ForcingSpec::zero(), &cfg, &mut []).unwrap();
        assert!(traj.termination.is_completed());
        let a3 = mode_amplitudes(traj.final_state()).amplitude(3);
        assert_relative_eq!(a3, 0.1 * (-64.0f64 * 0.05).exp(), max_relative = 1e-4);
        assert_eq!(*traj.times.last().unwrap(), 0.05);
    }

    #[test]
    fn invalid_config() {
        let g = make_grid::<f64>(16).unwrap();
        let s0 = SupportField::circle(g, 1.0);
        let spec = ForcingSpec::zero();
        assert!(evolve(&s0, &spec, &FlowConfig::new(0.0, 1.0), &mut []).is_err());
        assert!(evolve(&s0, &spec, &FlowConfig::new(0.1, -1.0), &mut []).is_err());
        assert!(evolve(
            &s0,
            &spec,
            &FlowConfig::new(0.1, 1.0).with_record_every(0),
            &mut []
        )
        .is_err());
        assert!(step(&s0, &spec, -1.0, Scheme::Imex1).is_err());
    }

    #[test]
    fn non_convex_start_aborts() {
        let g = make_grid::<f64>(32).unwrap();
        let s0 = SupportField::from_fn(g, |t| 0.1 + (2.0 * t).cos());
        let traj = evolve(
            &s0,
            &ForcingSpec::zero(),
            &FlowConfig::new(1e-3, 0.1),
            &mut [],
        )
        .unwrap();
        assert_eq!(traj.termination, Termination::ConvexityLost { t: 0.0 });
        assert_eq!(traj.states.len(), 1);
    }

    #[test]
    fn monitor_can_stop() {
        let g = make_grid::<f64>(16).unwrap();
        let s0 = SupportField::circle(g, 1.0);
        let mut stop_at_three = |i: usize, _t: f64, _s: &SupportField<f64>| {
            if i == 3 {
                MonitorAction::Stop
            } else {
                MonitorAction::Continue
            }
        };
        let traj = evolve(
            &s0,
            &ForcingSpec::zero(),
            &FlowConfig::new(0.1, 1.0),
            &mut [&mut stop_at_three],
        )
        .unwrap();
        assert!(matches!(traj.termination, Termination::Stopped { .. }));
        assert_relative_eq!(*traj.times.last().unwrap(), 0.3, max_relative = 1e-12);
    }

    #[test]
    fn curvature_flow_examples() {
        let g = make_grid::<f64>(16).unwrap();
        let k = CurvatureField::new(Field::constant(g.clone(), 0.5));
        let p = CurvatureFlowParams {
            xi: 0.0,
            forcing: ForcingSpec::zero(),
        };
        let next = curvature_flow_step(&k, &p, 0.01).unwrap();
        assert!(next
            .values()
            .iter()
            .all(|&v| (v - 0.5 * (1.0 - 0.02)).abs() < 1e-15));

        let xi = 0.25;
        let kstar = 0.8;
        let p = CurvatureFlowParams {
            xi,
            forcing: ForcingSpec::Constant(2.0 * kstar + 4.0 * xi * kstar * kstar * kstar),
        };
        let k = CurvatureField::new(Field::constant(g.clone(), kstar));
        let next = curvature_flow_step(&k, &p, 0.1).unwrap();
        assert!(next.max_abs_diff(&k) < 1e-15);

        let p = CurvatureFlowParams {
            xi: 0.25,
            forcing: ForcingSpec::zero(),
        };
        let k = CurvatureField::new(Field::constant(g.clone(), 1.0));
        let rhs = curvature_flow_rhs(&k, &p).unwrap();
        assert!(rhs.values().iter().all(|&v| (v + 3.0).abs() < 1e-14));

        let p = CurvatureFlowParams {
            xi: 0.0,
            forcing: ForcingSpec::zero(),
        };
        assert!(matches!(
            curvature_flow_step(&k, &p, 1.0),
            Err(FlowError::DegenerateCurvature { .. })
        ));
        let needs_s = CurvatureFlowParams {
            xi: 0.0,
            forcing: ForcingSpec::Proportional(1.0),
        };
        assert!(matches!(
            curvature_flow_step(&k, &needs_s, 0.1),
            Err(FlowError::InvalidContext(_))
        ));
    }
}
