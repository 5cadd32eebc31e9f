//! Forced bi-harmonic flow of convex planar curves on the support function.
//!
//! The state of every flow is the support function `S(θ)` sampled on a
//! uniform periodic grid. The crate provides
//!
//! - spectral differentiation and the operator `L = -(∂⁴ + 2∂² + 1)` ([`grid`]),
//! - curve reconstruction, curvature, length and area ([`geometry`]),
//! - forcing terms and their expression language ([`forcing`]),
//! - IMEX time stepping and the curvature gradient flow ([`evolution`]),
//! - a Newton–Krylov steady-state solver ([`steady`]),
//! - energies, type classification and monitors ([`diagnostics`]).
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix double precision, which the tolerances in the tests assume.

// `!(x > 0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod forcing;
pub mod geometry;
pub mod grid;
pub mod krylov;
pub mod scalar;
pub mod steady;

pub use diagnostics::{
    bending_energy, classify_monge_ampere, convexity_sufficient_condition, energy_series,
    DiagnosticsRecord, EnergyParams, EnergySample, EquationType, MAClassification,
};
pub use error::{FlowError, Result};
pub use evolution::{
    curvature_flow, curvature_flow_step, evolve, step, ConvexityPolicy, CurvatureFlowParams,
    FlowConfig, ForcingBoundMonitor, MarginMonitor, MonitorAction, Scheme, StepMonitor,
    Termination, Trajectory,
};
pub use forcing::{
    check_forcing_bound, eval_forcing, forcing_s_derivative, parse_forcing, BoundReport,
    ForcingContext, ForcingSpec,
};
pub use geometry::{
    area_of, convexity_margin, curvature_of, curve_of, length_of, support_of, CurvatureField,
    PlaneCurve, SupportField,
};
pub use grid::{
    apply_linear_operator, differentiate, make_grid, mode_amplitudes, Field, ModeSpectrum,
    ThetaGrid,
};
pub use scalar::Scalar;
pub use steady::{residual, solve_steady, sweep, Pinning, SteadyOptions, SteadyResult, SweepItem};

pub type Grid64 = ThetaGrid<f64>;
pub type Field64 = Field<f64>;
pub type SupportField64 = SupportField<f64>;
pub type CurvatureField64 = CurvatureField<f64>;
pub type PlaneCurve64 = PlaneCurve<f64>;
pub type ForcingSpec64 = ForcingSpec<f64>;
pub type FlowConfig64 = FlowConfig<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type SteadyOptions64 = SteadyOptions<f64>;
pub type SteadyResult64 = SteadyResult<f64>;
pub type DiagnosticsRecord64 = DiagnosticsRecord<f64>;

pub type Grid32 = ThetaGrid<f32>;
pub type Field32 = Field<f32>;
pub type SupportField32 = SupportField<f32>;
