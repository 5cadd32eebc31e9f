//! Forcing terms `F` for the support-function flow.
//!
//! A [`ForcingSpec`] is either one of the built-in families or a parsed
//! arithmetic expression over `S`, `S_theta`, `S_thetatheta`, `kappa` and the
//! grid angle. Evaluation is pointwise on a [`ForcingContext`].

pub mod expr;

use std::fmt;
use std::sync::Arc;

pub use expr::{parse_expr, Expr, Variable};

use crate::error::{FlowError, Result};
use crate::geometry::{curvature_of, SupportField};
use crate::grid::{differentiate, Field, ThetaGrid};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec<T: Scalar> {
    /// `F ≡ value`.
    Constant(T),
    /// `F = c·S`.
    Proportional(T),
    /// `F = α·κ² + β·S_θθ`.
    Anisotropic {
        alpha: T,
        beta: T,
    },
    /// `F = -β·S` with `β > 0`.
    Collapse {
        beta: T,
    },
    Expression(Expr<T>),
}

impl<T: Scalar> ForcingSpec<T> {
    pub fn zero() -> Self {
        ForcingSpec::Constant(T::zero())
    }

    pub fn collapse(beta: T) -> Result<Self> {
        let spec = ForcingSpec::Collapse { beta };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ForcingSpec::Collapse { beta } if !(*beta > T::zero()) => Err(
                FlowError::InvalidArgument(format!("collapse rate must be positive, got {beta}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn uses(&self, var: Variable) -> bool {
        match self {
            ForcingSpec::Constant(_) => false,
            ForcingSpec::Proportional(_) | ForcingSpec::Collapse { .. } => var == Variable::S,
            ForcingSpec::Anisotropic { .. } => {
                matches!(var, Variable::Kappa | Variable::SThetaTheta)
            }
            ForcingSpec::Expression(e) => e.uses(var),
        }
    }

    /// Coefficient of a term `b·S_θθ` that the time stepper may treat
    /// implicitly, if the spec has one.
    pub fn implicit_second_derivative_weight(&self) -> Option<T> {
        match self {
            ForcingSpec::Anisotropic { beta, .. } => Some(*beta),
            _ => None,
        }
    }
}

impl<T: Scalar> fmt::Display for ForcingSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingSpec::Constant(c) => write!(f, "{c:?}"),
            ForcingSpec::Proportional(c) => write!(f, "{c:?}*S"),
            ForcingSpec::Anisotropic { alpha, beta } => {
                write!(f, "{alpha:?}*kappa^2 + {beta:?}*S_thetatheta")
            }
            ForcingSpec::Collapse { beta } => write!(f, "-{beta:?}*S"),
            ForcingSpec::Expression(e) => write!(f, "{e}"),
        }
    }
}

/// Parses forcing text, normalizing the sugar forms `c*S`, `-b*S`,
/// `a*kappa^2 + b*S_thetatheta` and bare numbers to the built-in families.
pub fn parse_forcing<T: Scalar>(text: &str) -> Result<ForcingSpec<T>> {
    let e = parse_expr::<T>(text)?;
    Ok(normalize(e))
}

fn literal<T: Scalar>(e: &Expr<T>) -> Option<T> {
    match e {
        Expr::Num(c) => Some(*c),
        Expr::Neg(inner) => literal(inner).map(|c| -c),
        _ => None,
    }
}

fn coefficient_of<T: Scalar>(e: &Expr<T>, pred: impl Fn(&Expr<T>) -> bool) -> Option<T> {
    match e {
        Expr::Mul(a, b) if pred(b) => literal(a),
        _ => None,
    }
}

fn normalize<T: Scalar>(e: Expr<T>) -> ForcingSpec<T> {
    if let Some(c) = literal(&e) {
        return ForcingSpec::Constant(c);
    }
    let is_s = |x: &Expr<T>| *x == Expr::Var(Variable::S);
    if let Some(c) = coefficient_of(&e, is_s) {
        return if c < T::zero() {
            ForcingSpec::Collapse { beta: -c }
        } else {
            ForcingSpec::Proportional(c)
        };
    }
    if let Expr::Add(lhs, rhs) = &e {
        let kappa_sq = |x: &Expr<T>| *x == Expr::Pow(Box::new(Expr::Var(Variable::Kappa)), 2);
        let s_tt = |x: &Expr<T>| *x == Expr::Var(Variable::SThetaTheta);
        if let (Some(alpha), Some(beta)) =
            (coefficient_of(lhs, kappa_sq), coefficient_of(rhs, s_tt))
        {
            return ForcingSpec::Anisotropic { alpha, beta };
        }
    }
    ForcingSpec::Expression(e)
}

/// Fields a forcing may depend on. Absent entries are reported as
/// invalid-context errors when a spec needs them.
#[derive(Clone, Debug)]
pub struct ForcingContext<T: Scalar> {
    grid: Arc<ThetaGrid<T>>,
    pub s: Option<Field<T>>,
    pub s_theta: Option<Field<T>>,
    pub s_thetatheta: Option<Field<T>>,
    pub kappa: Option<Field<T>>,
}

impl<T: Scalar> ForcingContext<T> {
    pub fn new(grid: Arc<ThetaGrid<T>>) -> Self {
        Self {
            grid,
            s: None,
            s_theta: None,
            s_thetatheta: None,
            kappa: None,
        }
    }

    pub fn with_s(mut self, f: Field<T>) -> Self {
        self.s = Some(f);
        self
    }

    pub fn with_s_theta(mut self, f: Field<T>) -> Self {
        self.s_theta = Some(f);
        self
    }

    pub fn with_s_thetatheta(mut self, f: Field<T>) -> Self {
        self.s_thetatheta = Some(f);
        self
    }

    pub fn with_kappa(mut self, f: Field<T>) -> Self {
        self.kappa = Some(f);
        self
    }

    pub fn grid(&self) -> &Arc<ThetaGrid<T>> {
        &self.grid
    }

    /// Builds exactly the fields `spec` references from a support function.
    /// Curvature failures propagate when the spec needs `kappa`.
    pub fn for_spec(spec: &ForcingSpec<T>, s: &SupportField<T>) -> Result<Self> {
        let mut ctx = Self::new(s.grid().clone()).with_s(s.field().clone());
        if spec.uses(Variable::STheta) {
            ctx.s_theta = Some(differentiate(s, 1)?);
        }
        if spec.uses(Variable::SThetaTheta) {
            ctx.s_thetatheta = Some(differentiate(s, 2)?);
        }
        if spec.uses(Variable::Kappa) {
            ctx.kappa = Some(curvature_of(s)?.0);
        }
        Ok(ctx)
    }

    /// Context for a flow that tracks curvature only (no support function).
    pub fn from_curvature(kappa: Field<T>) -> Self {
        Self::new(kappa.grid().clone()).with_kappa(kappa)
    }

    fn require(&self, var: Variable) -> Result<Option<&[T]>> {
        let field = match var {
            Variable::S => &self.s,
            Variable::STheta => &self.s_theta,
            Variable::SThetaTheta => &self.s_thetatheta,
            Variable::Kappa => &self.kappa,
            Variable::Theta | Variable::SinTheta | Variable::CosTheta => return Ok(None),
        };
        match field {
            Some(f) if f.len() == self.grid.n() => Ok(Some(f.values())),
            Some(f) => Err(FlowError::InvalidContext(format!(
                "`{}` has {} samples on a grid of {}",
                var.name(),
                f.len(),
                self.grid.n()
            ))),
            None => Err(FlowError::InvalidContext(format!(
                "forcing references `{}` but the context does not provide it",
                var.name()
            ))),
        }
    }
}

/// Per-point variable table resolved once per evaluation.
struct Columns<'a, T: Scalar> {
    cols: [Option<&'a [T]>; 7],
    theta: &'a [T],
}

impl<'a, T: Scalar> Columns<'a, T> {
    fn resolve(spec: &ForcingSpec<T>, ctx: &'a ForcingContext<T>) -> Result<Self> {
        let mut cols = [None; 7];
        for (slot, var) in cols.iter_mut().zip(Variable::ALL) {
            if spec.uses(var) {
                *slot = ctx.require(var)?;
            }
        }
        Ok(Self {
            cols,
            theta: ctx.grid.theta(),
        })
    }

    fn lookup(&self, j: usize) -> impl Fn(Variable) -> T + '_ {
        move |var| match var {
            Variable::Theta => self.theta[j],
            Variable::SinTheta => self.theta[j].sin(),
            Variable::CosTheta => self.theta[j].cos(),
            _ => {
                let idx = Variable::ALL.iter().position(|&v| v == var).unwrap();
                self.cols[idx].map_or(T::nan(), |c| c[j])
            }
        }
    }

    fn get(&self, var: Variable, j: usize) -> T {
        self.lookup(j)(var)
    }
}

fn finite_or_error<T: Scalar>(grid: &Arc<ThetaGrid<T>>, values: Vec<T>) -> Result<Field<T>> {
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(FlowError::Evaluation {
            index,
            theta: grid.theta()[index].as_f64(),
            value: values[index].as_f64(),
        });
    }
    Field::new(grid.clone(), values)
}

/// Pointwise `F` on the context grid.
pub fn eval_forcing<T: Scalar>(spec: &ForcingSpec<T>, ctx: &ForcingContext<T>) -> Result<Field<T>> {
    spec.validate()?;
    let cols = Columns::resolve(spec, ctx)?;
    let n = ctx.grid.n();
    let values: Vec<T> = match spec {
        ForcingSpec::Constant(c) => vec![*c; n],
        ForcingSpec::Proportional(c) => (0..n).map(|j| *c * cols.get(Variable::S, j)).collect(),
        ForcingSpec::Collapse { beta } => {
            (0..n).map(|j| -*beta * cols.get(Variable::S, j)).collect()
        }
        ForcingSpec::Anisotropic { alpha, beta } => (0..n)
            .map(|j| {
                let k = cols.get(Variable::Kappa, j);
                *alpha * k * k + *beta * cols.get(Variable::SThetaTheta, j)
            })
            .collect(),
        ForcingSpec::Expression(e) => (0..n).map(|j| e.eval(&cols.lookup(j))).collect(),
    };
    finite_or_error(&ctx.grid, values)
}

/// Pointwise `∂F/∂S`, defined only for forcings that depend on `S` (and the
/// angle) alone.
pub fn forcing_s_derivative<T: Scalar>(
    spec: &ForcingSpec<T>,
    ctx: &ForcingContext<T>,
) -> Result<Field<T>> {
    spec.validate()?;
    for var in [Variable::STheta, Variable::SThetaTheta, Variable::Kappa] {
        if spec.uses(var) {
            return Err(FlowError::UnsupportedDerivative(format!(
                "forcing `{spec}` depends on `{}`",
                var.name()
            )));
        }
    }
    let n = ctx.grid.n();
    let values = match spec {
        ForcingSpec::Constant(_) => vec![T::zero(); n],
        ForcingSpec::Proportional(c) => vec![*c; n],
        ForcingSpec::Collapse { beta } => vec![-*beta; n],
        ForcingSpec::Anisotropic { .. } => unreachable!("rejected above"),
        ForcingSpec::Expression(e) => {
            let cols = Columns::resolve(spec, ctx)?;
            (0..n)
                .map(|j| e.eval_with_s_derivative(&cols.lookup(j)).1)
                .collect()
        }
    };
    finite_or_error(&ctx.grid, values)
}

/// Outcome of checking `0 < F ≤ S² − 1` on every grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport<T: Scalar> {
    pub passed: bool,
    /// `min F` and where it occurs.
    pub min_forcing: T,
    pub min_forcing_index: usize,
    /// `min (S² − 1 − F)` and where it occurs.
    pub min_upper_margin: T,
    pub min_upper_margin_index: usize,
}

impl<T: Scalar> BoundReport<T> {
    /// Index of the more severe of the two margins.
    pub fn worst_index(&self) -> usize {
        if self.min_forcing <= self.min_upper_margin {
            self.min_forcing_index
        } else {
            self.min_upper_margin_index
        }
    }
}

pub fn check_forcing_bound<T: Scalar>(
    spec: &ForcingSpec<T>,
    s: &SupportField<T>,
) -> Result<BoundReport<T>> {
    let ctx = ForcingContext::for_spec(spec, s)?;
    let f = eval_forcing(spec, &ctx)?;
    let upper = s.zip_with(&f, |sv, fv| sv * sv - T::one() - fv);
    let (min_forcing, min_forcing_index) = f.min_with_index();
    let (min_upper_margin, min_upper_margin_index) = upper.min_with_index();
    Ok(BoundReport {
        passed: min_forcing > T::zero() && min_upper_margin >= T::zero(),
        min_forcing,
        min_forcing_index,
        min_upper_margin,
        min_upper_margin_index,
    })
}
