#![allow(dead_code)]

use std::sync::Arc;

use curveflow::{make_grid, Field, Grid64, SupportField};
use proptest::prelude::*;

pub fn grid(n: usize) -> Arc<Grid64> {
    make_grid(n).unwrap()
}

/// Real trigonometric polynomial `Σ a_k cos kθ + b_k sin kθ`, `k = 0..`.
#[derive(Clone, Debug)]
pub struct Trig {
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl Trig {
    pub fn degree(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_derivative(t, 0)
    }

    /// Closed-form `order`-th derivative.
    pub fn eval_derivative(&self, t: f64, order: u32) -> f64 {
        let shift = order as f64 * std::f64::consts::FRAC_PI_2;
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let kf = k as f64;
                kf.powi(order as i32) * (a * (kf * t + shift).cos() + b * (kf * t + shift).sin())
            })
            .sum()
    }

    pub fn field(&self, g: &Arc<Grid64>) -> Field<f64> {
        Field::from_fn(g.clone(), |t| self.eval(t))
    }
}

/// Trigonometric polynomials of degree `1..=max_degree` with coefficients in `[-1, 1]`.
pub fn trig(max_degree: usize) -> impl Strategy<Value = Trig> {
    (1..=max_degree).prop_flat_map(|d| {
        (
            prop::collection::vec(-1.0..1.0f64, d + 1),
            prop::collection::vec(-1.0..1.0f64, d + 1),
        )
            .prop_map(|(cos, mut sin)| {
                sin[0] = 0.0;
                Trig { cos, sin }
            })
    })
}

/// Strictly convex support function: radius `r`, translation `(a, b)` and
/// shape modes `2..=max_k` scaled so that `S'' + S ≥ r / 2`.
#[derive(Clone, Debug)]
pub struct ConvexShape {
    pub r: f64,
    pub shift: (f64, f64),
    pub modes: Vec<(f64, f64)>,
}

impl ConvexShape {
    pub fn eval(&self, t: f64) -> f64 {
        let mut s = self.r + self.shift.0 * t.cos() + self.shift.1 * t.sin();
        for (i, (a, b)) in self.modes.iter().enumerate() {
            let k = (i + 2) as f64;
            s += a * (k * t).cos() + b * (k * t).sin();
        }
        s
    }

    pub fn support(&self, g: &Arc<Grid64>) -> SupportField<f64> {
        SupportField::from_fn(g.clone(), |t| self.eval(t))
    }
}

pub fn convex_shape(max_k: usize) -> impl Strategy<Value = ConvexShape> {
    (
        0.5..3.0f64,
        (-1.0..1.0f64, -1.0..1.0f64),
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), max_k - 1),
    )
        .prop_map(|(r, shift, raw)| {
            let weight: f64 = raw
                .iter()
                .enumerate()
                .map(|(i, (a, b))| ((i + 2) * (i + 2) - 1) as f64 * (a.abs() + b.abs()))
                .sum();
            let scale = if weight > 0.0 { 0.5 * r / weight } else { 0.0 };
            ConvexShape {
                r,
                shift,
                modes: raw
                    .into_iter()
                    .map(|(a, b)| (a * scale, b * scale))
                    .collect(),
            }
        })
}
