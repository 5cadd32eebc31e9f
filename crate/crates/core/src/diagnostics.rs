//! Energies, Monge–Ampère type classification, and per-sample records.

use crate::error::Result;
use crate::evolution::Trajectory;
use crate::forcing::{
    check_forcing_bound, eval_forcing, forcing_s_derivative, ForcingContext, ForcingSpec,
};
use crate::geometry::{area_of, convexity_margin, curvature_of, length_of, SupportField};
use crate::grid::{differentiate, Field};
use crate::scalar::Scalar;
use crate::steady::residual;

use num_complex::Complex;

/// Tie tolerance when classifying the sign of `S² − 1`.
pub const TOL_CLASS: f64 = 1e-12;

/// Slack used when testing the pointwise convexity-preservation inequality.
pub const TOL_SUFFICIENT: f64 = 1e-12;

/// Weights of the curvature energy `∫ (κ² + w·(∂_sκ)² + ξ·κ⁴) ds`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyParams<T: Scalar> {
    pub xi: T,
    pub grad_weight: T,
}

impl<T: Scalar> Default for EnergyParams<T> {
    fn default() -> Self {
        Self {
            xi: T::lit(0.1),
            grad_weight: T::one(),
        }
    }
}

impl<T: Scalar> EnergyParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= T::zero()) || !(self.grad_weight > T::zero()) {
            return Err(crate::FlowError::InvalidArgument(format!(
                "energy weights need xi >= 0 and grad_weight > 0, got xi = {}, grad_weight = {}",
                self.xi, self.grad_weight
            )));
        }
        Ok(())
    }
}

/// Curvature energy of a strictly convex curve.
///
/// Uses `ds = (S_θθ + S) dθ = dθ/κ` and `∂_s = κ ∂_θ`, so the integrand in
/// `θ` is `κ + w·κ·κ_θ² + ξ·κ³`.
pub fn bending_energy<T: Scalar>(s: &SupportField<T>, params: &EnergyParams<T>) -> Result<T> {
    params.validate()?;
    let kappa = curvature_of(s)?.0;
    let dk = differentiate(&kappa, 1)?;
    let integrand = kappa.zip_with(&dk, |k, kt| {
        k + params.grad_weight * k * kt * kt + params.xi * k * k * k
    });
    Ok(integrand.integral())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample<T: Scalar> {
    pub t: T,
    pub energy: T,
    /// Centered difference in the interior, one-sided at the ends.
    pub rate: T,
}

pub fn energy_series<T: Scalar>(
    traj: &Trajectory<T>,
    params: &EnergyParams<T>,
) -> Result<Vec<EnergySample<T>>> {
    let energies = traj
        .states
        .iter()
        .map(|s| bending_energy(s, params))
        .collect::<Result<Vec<_>>>()?;
    let t = &traj.times;
    let m = energies.len();
    let rate = |i: usize| -> T {
        if m < 2 {
            return T::zero();
        }
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == m - 1 {
            (m - 2, m - 1)
        } else {
            (i - 1, i + 1)
        };
        (energies[b] - energies[a]) / (t[b] - t[a])
    };
    Ok((0..m)
        .map(|i| EnergySample {
            t: t[i],
            energy: energies[i],
            rate: rate(i),
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EquationType {
    Hyperbolic,
    Degenerate,
    Elliptic,
    /// Global verdict only: the sign of the discriminant changes over the grid.
    Mixed,
}

/// Type of `A·S_tt + B·S_θθtt + C·(S_θθt)² + D = 0` with `A = 1`, `B = S²`,
/// `C = −1`, `D = F − 1`.
#[derive(Clone, Debug)]
pub struct MAClassification<T: Scalar> {
    pub a: T,
    pub b: Field<T>,
    pub c: T,
    /// `F − 1`; absent when the forcing cannot be evaluated on this state.
    pub d: Option<Field<T>>,
    /// `AB − C² = S² − 1`.
    pub discriminant: Field<T>,
    pub verdicts: Vec<EquationType>,
    pub global: EquationType,
}

impl<T: Scalar> MAClassification<T> {
    pub fn is_hyperbolic(&self) -> bool {
        self.global == EquationType::Hyperbolic
    }
}

fn classify_point<T: Scalar>(d: T) -> EquationType {
    let tol = T::lit(TOL_CLASS);
    if d > tol {
        EquationType::Hyperbolic
    } else if d < -tol {
        EquationType::Elliptic
    } else {
        EquationType::Degenerate
    }
}

pub fn classify_monge_ampere<T: Scalar>(
    s: &SupportField<T>,
    spec: &ForcingSpec<T>,
) -> MAClassification<T> {
    let b = s.map(|v| v * v);
    let discriminant = b.map(|v| v - T::one());
    let verdicts: Vec<EquationType> = discriminant
        .values()
        .iter()
        .map(|&d| classify_point(d))
        .collect();
    let global = if verdicts.iter().all(|&v| v == verdicts[0]) {
        verdicts[0]
    } else {
        EquationType::Mixed
    };
    let d = ForcingContext::for_spec(spec, s)
        .and_then(|ctx| eval_forcing(spec, &ctx))
        .ok()
        .map(|f| f.map(|v| v - T::one()));
    MAClassification {
        a: T::one(),
        b,
        c: -T::one(),
        d,
        discriminant,
        verdicts,
        global,
    }
}

/// Pointwise check of `(S_θθθθ + 2S_θθ + S)_θθ ≥ F'(S)·(S_θθ + S)`.
#[derive(Clone, Debug)]
pub struct SufficientConditionReport<T: Scalar> {
    pub lhs: Field<T>,
    pub rhs: Field<T>,
    pub holds: Vec<bool>,
    pub all_hold: bool,
}

pub fn convexity_sufficient_condition<T: Scalar>(
    s: &SupportField<T>,
    spec: &ForcingSpec<T>,
) -> Result<SufficientConditionReport<T>> {
    let ctx = ForcingContext::new(s.grid().clone()).with_s(s.field().clone());
    let fprime = forcing_s_derivative(spec, &ctx)?;
    // (k²-1)² · (-k²) applied to Ŝ.
    let lhs_values = s.grid().apply_symbol_chopped(s.values(), |k, _| {
        let k2 = T::from_i64(k * k).unwrap();
        let m = k2 - T::one();
        Complex::new(-(m * m) * k2, T::zero())
    });
    let lhs = Field::new(s.grid().clone(), lhs_values)?;
    let rhs = fprime.zip_with(&s.radius_of_curvature(), |a, b| a * b);
    let tol = T::lit(TOL_SUFFICIENT);
    let holds: Vec<bool> = lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(&l, &r)| l >= r - tol)
        .collect();
    let all_hold = holds.iter().all(|&h| h);
    Ok(SufficientConditionReport {
        lhs,
        rhs,
        holds,
        all_hold,
    })
}

/// Scalars recorded for one trajectory sample. Quantities that require
/// strict convexity are NaN when the state is not convex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord<T: Scalar> {
    pub t: T,
    pub energy: T,
    pub l2_norm: T,
    pub convexity_margin: T,
    /// `min (S² − 1)`.
    pub hyperbolicity_margin: T,
    pub forcing_bound_ok: bool,
    pub length: T,
    pub area: T,
    /// `‖S_θθθθ + 2S_θθ + S − F(S)‖₂`.
    pub steady_residual_norm: T,
}

impl<T: Scalar> DiagnosticsRecord<T> {
    pub fn compute(
        t: T,
        s: &SupportField<T>,
        spec: &ForcingSpec<T>,
        params: &EnergyParams<T>,
    ) -> Self {
        let nan = T::nan();
        Self {
            t,
            energy: bending_energy(s, params).unwrap_or(nan),
            l2_norm: s.l2_norm(),
            convexity_margin: convexity_margin(s),
            hyperbolicity_margin: s.map(|v| v * v - T::one()).min(),
            forcing_bound_ok: check_forcing_bound(spec, s)
                .map(|r| r.passed)
                .unwrap_or(false),
            length: length_of(s),
            area: area_of(s).unwrap_or(nan),
            steady_residual_norm: residual(s, spec).map(|r| r.l2_norm()).unwrap_or(nan),
        }
    }
}
