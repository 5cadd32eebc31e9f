//! Support functions, curvature, and reconstructed plane curves.
//!
//! A strictly convex closed curve is encoded by its support function `S(θ)`,
//! the signed distance from the origin to the tangent line whose outward
//! normal has angle `θ`. The curve point with that normal is
//! `(S cos θ - S_θ sin θ, S sin θ + S_θ cos θ)` and the radius of curvature
//! is `S_θθ + S`.

use std::ops::Deref;
use std::sync::Arc;

use crate::error::{FlowError, Result};
use crate::grid::{differentiate, Field, ThetaGrid};
use crate::scalar::Scalar;

/// Strict-convexity floor for `min(S_θθ + S)`.
pub const TOL_CONVEX: f64 = 1e-10;

/// Sampled support function.
#[derive(Clone, Debug)]
pub struct SupportField<T: Scalar>(pub Field<T>);

impl<T: Scalar> SupportField<T> {
    pub fn new(field: Field<T>) -> Self {
        Self(field)
    }

    pub fn from_fn(grid: Arc<ThetaGrid<T>>, f: impl Fn(T) -> T) -> Self {
        Self(Field::from_fn(grid, f))
    }

    /// Circle of radius `r` centered at the origin.
    pub fn circle(grid: Arc<ThetaGrid<T>>, r: T) -> Self {
        Self(Field::constant(grid, r))
    }

    /// `r + eps·cos(kθ)`.
    pub fn perturbed_circle(grid: Arc<ThetaGrid<T>>, r: T, k: u32, eps: T) -> Self {
        let kk = T::from_u32(k).unwrap();
        Self::from_fn(grid, |t| r + eps * (kk * t).cos())
    }

    pub fn field(&self) -> &Field<T> {
        &self.0
    }

    pub fn into_field(self) -> Field<T> {
        self.0
    }

    /// `S_θθ + S`, the radius of curvature.
    pub fn radius_of_curvature(&self) -> Field<T> {
        let d2 = differentiate(&self.0, 2).expect("order 2 supported");
        d2.add(&self.0)
    }
}

impl<T: Scalar> Deref for SupportField<T> {
    type Target = Field<T>;

    fn deref(&self) -> &Field<T> {
        &self.0
    }
}

/// Sampled curvature `κ(θ)`.
#[derive(Clone, Debug)]
pub struct CurvatureField<T: Scalar>(pub Field<T>);

impl<T: Scalar> Deref for CurvatureField<T> {
    type Target = Field<T>;

    fn deref(&self) -> &Field<T> {
        &self.0
    }
}

impl<T: Scalar> CurvatureField<T> {
    pub fn new(field: Field<T>) -> Self {
        Self(field)
    }

    pub fn field(&self) -> &Field<T> {
        &self.0
    }
}

/// Closed polygonal curve, one vertex per grid angle. The last vertex
/// connects back to the first.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneCurve<T: Scalar> {
    pub points: Vec<[T; 2]>,
}

impl<T: Scalar> PlaneCurve<T> {
    pub fn new(points: Vec<[T; 2]>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points
            .iter()
            .all(|p| p[0].is_finite() && p[1].is_finite())
    }

    /// Shoelace signed area; positive for counterclockwise winding.
    pub fn signed_area(&self) -> T {
        let n = self.points.len();
        let half = T::lit(0.5);
        (0..n)
            .map(|i| {
                let [x0, y0] = self.points[i];
                let [x1, y1] = self.points[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .fold(T::zero(), |s, v| s + v)
            * half
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self::new(self.points.iter().map(|&[x, y]| [x + dx, y + dy]).collect())
    }

    /// Bounding box `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (T, T, T, T) {
        let init = (
            T::infinity(),
            T::infinity(),
            T::neg_infinity(),
            T::neg_infinity(),
        );
        self.points.iter().fold(init, |(a, b, c, d), &[x, y]| {
            (a.min(x), b.min(y), c.max(x), d.max(y))
        })
    }
}

/// `min(S_θθ + S)` over the grid; positive iff strictly convex.
pub fn convexity_margin<T: Scalar>(s: &SupportField<T>) -> T {
    s.radius_of_curvature().min()
}

fn require_convex<T: Scalar>(rho: &Field<T>) -> Result<()> {
    let (margin, index) = rho.min_with_index();
    if margin.is_nan() || margin <= T::lit(TOL_CONVEX) {
        return Err(FlowError::DegenerateCurvature {
            margin: margin.as_f64(),
            index,
            theta: rho.grid().theta()[index].as_f64(),
        });
    }
    Ok(())
}

/// `κ = 1 / (S_θθ + S)`; fails when the curve is not strictly convex.
pub fn curvature_of<T: Scalar>(s: &SupportField<T>) -> Result<CurvatureField<T>> {
    let rho = s.radius_of_curvature();
    require_convex(&rho)?;
    Ok(CurvatureField(rho.map(|r| T::one() / r)))
}

/// Reconstructs the curve point with outward normal angle `θ_j` for every `j`.
pub fn curve_of<T: Scalar>(s: &SupportField<T>) -> PlaneCurve<T> {
    let ds = differentiate(&s.0, 1).expect("order 1 supported");
    let points = s
        .grid()
        .theta()
        .iter()
        .zip(s.values())
        .zip(ds.values())
        .map(|((&t, &sv), &dv)| {
            let (sin, cos) = t.sin_cos();
            [sv * cos - dv * sin, sv * sin + dv * cos]
        })
        .collect();
    PlaneCurve::new(points)
}

/// Support function of the convex hull of `curve`, sampled on `grid`.
///
/// The curve must be a strictly convex counterclockwise polygon: every
/// vertex turns left and the turning angles sum to one full revolution.
pub fn support_of<T: Scalar>(
    curve: &PlaneCurve<T>,
    grid: &Arc<ThetaGrid<T>>,
) -> Result<SupportField<T>> {
    check_strictly_convex(curve)?;
    let values = grid
        .theta()
        .iter()
        .map(|&t| {
            let (sin, cos) = t.sin_cos();
            curve
                .points
                .iter()
                .map(|&[x, y]| x * cos + y * sin)
                .fold(T::neg_infinity(), T::max)
        })
        .collect();
    Ok(SupportField(Field::new(grid.clone(), values)?))
}

fn check_strictly_convex<T: Scalar>(curve: &PlaneCurve<T>) -> Result<()> {
    let n = curve.points.len();
    if n < 3 {
        return Err(FlowError::NonConvexInput(format!("{n} vertices")));
    }
    if !curve.is_finite() {
        return Err(FlowError::NonConvexInput("non-finite vertex".into()));
    }
    let mut turning = T::zero();
    for i in 0..n {
        let [x0, y0] = curve.points[(i + n - 1) % n];
        let [x1, y1] = curve.points[i];
        let [x2, y2] = curve.points[(i + 1) % n];
        let (ax, ay) = (x1 - x0, y1 - y0);
        let (bx, by) = (x2 - x1, y2 - y1);
        let cross = ax * by - ay * bx;
        if !(cross > T::zero()) {
            return Err(FlowError::NonConvexInput(format!(
                "vertex {i} does not turn counterclockwise"
            )));
        }
        turning = turning + cross.atan2(ax * bx + ay * by);
    }
    // A simple convex polygon turns exactly once.
    if (turning - T::TAU()).abs() > T::lit(1e-6) {
        return Err(FlowError::NonConvexInput(format!(
            "total turning {} is not one revolution",
            turning.as_f64()
        )));
    }
    Ok(())
}

/// Perimeter by Cauchy's formula `∫ S dθ`.
pub fn length_of<T: Scalar>(s: &SupportField<T>) -> T {
    s.integral()
}

/// Enclosed area `½ ∫ S (S_θθ + S) dθ`.
pub fn area_of<T: Scalar>(s: &SupportField<T>) -> Result<T> {
    let rho = s.radius_of_curvature();
    require_convex(&rho)?;
    Ok(s.zip_with(&rho, |a, b| a * b).integral() * T::lit(0.5))
}
