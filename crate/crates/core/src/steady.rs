//! Steady states `S_θθθθ + 2S_θθ + S = F(S)` by Newton–Krylov iteration.
//!
//! The Jacobian is never formed. Its action is the exact constant-coefficient
//! part `(k²-1)²` applied spectrally, minus a forward difference of the
//! forcing along the direction. Linear systems are solved by GMRES,
//! right-preconditioned with the symbol `(k²-1)² + 1`.
//!
//! The operator has neutral translation modes (`k = ±1`) and, for `F = S`,
//! a free mean. [`Pinning`] removes those modes from the unknowns and from the
//! equations, and re-imposes them on every iterate.

use std::cell::RefCell;

use num_complex::Complex;

use crate::error::{FlowError, Result};
use crate::forcing::{eval_forcing, ForcingContext, ForcingSpec, Variable};
use crate::geometry::{convexity_margin, SupportField};
use crate::grid::{apply_linear_operator, linear_symbol, mode_amplitudes, Field};
use crate::krylov::gmres;
use crate::scalar::Scalar;

/// `R(S) = S_θθθθ + 2S_θθ + S − F(S)`.
pub fn residual<T: Scalar>(s: &SupportField<T>, spec: &ForcingSpec<T>) -> Result<Field<T>> {
    let ctx = ForcingContext::for_spec(spec, s)?;
    let f = eval_forcing(spec, &ctx)?;
    let minus_l = apply_linear_operator(s).scale(-T::one());
    Ok(minus_l.sub(&f))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pinning<T: Scalar> {
    /// Hold the mean of `S` (the `k = 0` mode) at the given value.
    FixMean(T),
    /// Zero the `k = ±1` modes.
    FixTranslation,
    Both(T),
}

impl<T: Scalar> Pinning<T> {
    fn mean(&self) -> Option<T> {
        match self {
            Pinning::FixMean(m) | Pinning::Both(m) => Some(*m),
            Pinning::FixTranslation => None,
        }
    }

    fn translation(&self) -> bool {
        matches!(self, Pinning::FixTranslation | Pinning::Both(_))
    }

    fn pins_wavenumber(&self, k: i64) -> bool {
        (k == 0 && self.mean().is_some()) || (k.abs() == 1 && self.translation())
    }

    /// Imposes the pinned modes on `s`, working on samples directly so that
    /// states already satisfying the constraint are left untouched.
    pub fn impose(&self, s: &Field<T>) -> Field<T> {
        let grid = s.grid().clone();
        let mut values = s.values().to_vec();
        if self.translation() {
            let two_over_n = T::lit(2.0) / T::from_usize_lossy(grid.n());
            let (mut a, mut b) = (T::zero(), T::zero());
            for (&v, &t) in values.iter().zip(grid.theta()) {
                a = a + v * t.cos();
                b = b + v * t.sin();
            }
            let (a, b) = (a * two_over_n, b * two_over_n);
            for (v, &t) in values.iter_mut().zip(grid.theta()) {
                *v = *v - (a * t.cos() + b * t.sin());
            }
        }
        if let Some(target) = self.mean() {
            let mean =
                values.iter().fold(T::zero(), |acc, &v| acc + v) / T::from_usize_lossy(grid.n());
            let shift = target - mean;
            if shift != T::zero() {
                for v in values.iter_mut() {
                    *v = *v + shift;
                }
            }
        }
        Field::from_raw(grid, values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyOptions<T: Scalar> {
    pub max_iters: usize,
    /// Max-norm tolerance on the residual.
    pub residual_tol: T,
    pub pinning: Pinning<T>,
    /// Relative step for the directional forcing derivative.
    pub fd_epsilon: T,
    pub linear_tol: T,
    pub linear_restart: usize,
    pub linear_max_iters: usize,
}

impl<T: Scalar> Default for SteadyOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 50,
            residual_tol: T::lit(1e-10),
            pinning: Pinning::FixTranslation,
            fd_epsilon: T::lit(1e-7),
            linear_tol: T::lit(1e-12),
            linear_restart: 40,
            linear_max_iters: 400,
        }
    }
}

impl<T: Scalar> SteadyOptions<T> {
    pub fn with_pinning(mut self, pinning: Pinning<T>) -> Self {
        self.pinning = pinning;
        self
    }

    pub fn validate(&self, spec: &ForcingSpec<T>) -> Result<()> {
        if !(self.residual_tol > T::zero()) {
            return Err(FlowError::InvalidArgument(
                "residual_tol must be positive".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(FlowError::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.fd_epsilon > T::zero()) {
            return Err(FlowError::InvalidArgument(
                "fd_epsilon must be positive".into(),
            ));
        }
        if *spec == ForcingSpec::Proportional(T::one()) && self.pinning.mean().is_none() {
            return Err(FlowError::InvalidArgument(
                "F = S leaves the mean undetermined; pin it with fix_mean".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SteadyResult<T: Scalar> {
    /// Converged state, or the best iterate when not converged.
    pub s_inf: SupportField<T>,
    /// Max-norm residual of `s_inf`.
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
    pub convexity_margin: T,
    /// Max-norm residual of every Newton iterate, starting with the initial one.
    pub residual_history: Vec<T>,
    pub linear_iterations: usize,
    /// Linear solves that stopped short of their tolerance.
    pub linear_stagnations: usize,
    pub failure: Option<String>,
}

impl<T: Scalar> SteadyResult<T> {
    /// Largest Fourier amplitude at `k ≥ 2`; zero for a circle.
    pub fn noncircularity(&self) -> T {
        mode_amplitudes(&self.s_inf).max_from(2)
    }
}

fn rms<T: Scalar>(v: &[T]) -> T {
    let n = T::from_usize_lossy(v.len());
    (v.iter().fold(T::zero(), |s, &x| s + x * x) / n).sqrt()
}

fn max_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(
        T::zero(),
        |m, &x| if x.is_nan() { x } else { m.max(x.abs()) },
    )
}

struct NewtonSystem<'a, T: Scalar> {
    spec: &'a ForcingSpec<T>,
    pinning: Pinning<T>,
    state: SupportField<T>,
    forcing: Field<T>,
    epsilon: T,
    error: RefCell<Option<FlowError>>,
}

impl<T: Scalar> NewtonSystem<'_, T> {
    fn project(&self, v: &[T]) -> Vec<T> {
        let pin = self.pinning;
        self.state.grid().apply_symbol(v, |k, _| {
            if pin.pins_wavenumber(k) {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::one(), T::zero())
            }
        })
    }

    fn precondition(&self, v: &[T]) -> Vec<T> {
        let pin = self.pinning;
        self.state.grid().apply_symbol(v, |k, _| {
            if pin.pins_wavenumber(k) {
                Complex::new(T::zero(), T::zero())
            } else {
                Complex::new(T::one() / (T::one() - linear_symbol::<T>(k)), T::zero())
            }
        })
    }

    /// `P J P v`.
    fn apply(&self, v: &[T]) -> Vec<T> {
        let grid = self.state.grid().clone();
        let v = self.project(v);
        let mut out: Vec<T> =
            grid.apply_symbol(&v, |k, _| Complex::new(-linear_symbol::<T>(k), T::zero()));
        if self.depends_on_state() {
            let scale = rms(&v);
            if scale > T::zero() {
                let perturbed: Vec<T> = self
                    .state
                    .values()
                    .iter()
                    .zip(&v)
                    .map(|(&s, &d)| s + self.epsilon * d / scale)
                    .collect();
                let perturbed = SupportField::new(Field::from_raw(grid.clone(), perturbed));
                match ForcingContext::for_spec(self.spec, &perturbed)
                    .and_then(|ctx| eval_forcing(self.spec, &ctx))
                {
                    Ok(f) => {
                        let factor = scale / self.epsilon;
                        for ((o, &fp), &f0) in
                            out.iter_mut().zip(f.values()).zip(self.forcing.values())
                        {
                            *o = *o - (fp - f0) * factor;
                        }
                    }
                    Err(e) => {
                        self.error.borrow_mut().get_or_insert(e);
                    }
                }
            }
        }
        self.project(&out)
    }

    fn depends_on_state(&self) -> bool {
        [
            Variable::S,
            Variable::STheta,
            Variable::SThetaTheta,
            Variable::Kappa,
        ]
        .iter()
        .any(|&v| self.spec.uses(v))
    }
}

fn evaluate<T: Scalar>(s: &SupportField<T>, spec: &ForcingSpec<T>) -> Result<(Field<T>, Field<T>)> {
    let ctx = ForcingContext::for_spec(spec, s)?;
    let f = eval_forcing(spec, &ctx)?;
    let r = apply_linear_operator(s).scale(-T::one()).sub(&f);
    Ok((f, r))
}

/// Newton iteration from `s_init` with backtracking on the max-norm residual.
pub fn solve_steady<T: Scalar>(
    s_init: &SupportField<T>,
    spec: &ForcingSpec<T>,
    opts: &SteadyOptions<T>,
) -> Result<SteadyResult<T>> {
    opts.validate(spec)?;
    spec.validate()?;
    if !s_init.is_finite() {
        return Err(FlowError::InvalidArgument(
            "initial state is not finite".into(),
        ));
    }
    let pinning = opts.pinning;
    let mut s = SupportField::new(pinning.impose(s_init));
    let (mut f, mut r) = evaluate(&s, spec)?;
    let mut r_norm = max_norm(r.values());
    let mut history = vec![r_norm];
    let mut linear_iterations = 0;
    let mut linear_stagnations = 0;
    let mut iterations = 0;
    let mut failure = None;

    while r_norm > opts.residual_tol && iterations < opts.max_iters {
        iterations += 1;
        let system = NewtonSystem {
            spec,
            pinning,
            state: s.clone(),
            forcing: f.clone(),
            epsilon: opts.fd_epsilon * (T::one() + rms(s.values())),
            error: RefCell::new(None),
        };
        let rhs: Vec<T> = system.project(r.values()).into_iter().map(|v| -v).collect();
        let outcome = gmres(
            |v| system.apply(v),
            |v| system.precondition(v),
            &rhs,
            opts.linear_tol,
            opts.linear_restart,
            opts.linear_max_iters,
        );
        linear_iterations += outcome.iterations;
        if !outcome.converged {
            linear_stagnations += 1;
            log::debug!(
                "newton {iterations}: linear solve stalled at relative residual {}",
                outcome.relative_residual
            );
        }
        let delta = Field::from_raw(s.grid().clone(), system.project(&outcome.x));
        if let Some(e) = system.error.into_inner() {
            failure = Some(format!("jacobian evaluation failed: {e}"));
            break;
        }

        let mut accepted = None;
        let mut lambda = T::one();
        for _ in 0..12 {
            let trial = SupportField::new(pinning.impose(&s.axpby(T::one(), &delta, lambda)));
            if trial.is_finite() {
                if let Ok((tf, tr)) = evaluate(&trial, spec) {
                    let tn = max_norm(tr.values());
                    if tn < r_norm {
                        accepted = Some((trial, tf, tr, tn));
                        break;
                    }
                }
            }
            lambda = lambda * T::lit(0.5);
        }
        match accepted {
            Some((ns, nf, nr, nn)) => {
                s = ns;
                f = nf;
                r = nr;
                r_norm = nn;
                history.push(r_norm);
            }
            None => {
                failure = Some(format!("line search failed at residual {r_norm}"));
                break;
            }
        }
    }

    let converged = r_norm <= opts.residual_tol;
    if !converged && failure.is_none() {
        failure = Some(format!("no convergence after {iterations} iterations"));
    }
    Ok(SteadyResult {
        convexity_margin: convexity_margin(&s),
        s_inf: s,
        residual_norm: r_norm,
        iterations,
        converged,
        residual_history: history,
        linear_iterations,
        linear_stagnations,
        failure,
    })
}

#[derive(Clone, Debug)]
pub struct SweepItem<T: Scalar> {
    pub param: T,
    pub outcome: Result<SteadyResult<T>>,
}

/// Solves for each parameter in order, warm-starting from the previous
/// converged solution. Failures are recorded and the sweep continues.
pub fn sweep<T, F>(
    family: F,
    params: &[T],
    init: &SupportField<T>,
    opts: &SteadyOptions<T>,
) -> Vec<SweepItem<T>>
where
    T: Scalar,
    F: Fn(T) -> Result<ForcingSpec<T>>,
{
    let mut start = init.clone();
    params
        .iter()
        .map(|&param| {
            let outcome = family(param).and_then(|spec| solve_steady(&start, &spec, opts));
            if let Ok(res) = &outcome {
                if res.converged {
                    start = res.s_inf.clone();
                }
            }
            SweepItem { param, outcome }
        })
        .collect()
}
