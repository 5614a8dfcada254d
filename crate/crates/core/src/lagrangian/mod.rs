//! Particle flow maps `η(t, x)` with their deformation gradients `Dη`.
//!
//! Each seed carries its position, the Jacobian `Dη`, the stretching integral
//! `I(t) = ∫₀ᵗ Λ(τ, x) dτ` with `Λ = ∂₂u₂ = R₁₂ω` sampled along the path, and
//! the Duhamel remainder integral `J(t) = ∫₀ᵗ A⁻¹ P Dη dτ`, where
//! `A = diag(e^{−I}, e^{I})` and `P` is the off-diagonal part of `∇u`.
//! With these, `Dη = A (Id + J)` holds along exact solutions.

mod checks;
mod duhamel;
mod ensemble;
mod labels;
pub mod matrix;
pub mod seeds;
mod source;

pub use checks::{
    axis_defects, comparison_experiment, fd_jacobian_check, inverse_pullback, sign_preservation,
    AxisDefects, ComparisonPoint, FdCheck, SignReport,
};
pub use duhamel::{duhamel_split, ray_reconstruct, DuhamelSplit, RayReconstruction};
pub use ensemble::{FlowEnsemble, FlowRecord};
pub use labels::{forward_map_from_labels, ForwardMap};
pub use matrix::Mat2;
pub use source::{
    AnalyticSource, GridSource, KinematicSample, TrajectorySource, VelocitySource,
    DEFAULT_PARTICLE_ORDER,
};

use thiserror::Error;

use crate::field::FieldError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum LagrangianError {
    #[error("time {t} lies outside the stored trajectory [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("missing history: {0}")]
    MissingHistory(String),
    #[error("ray through {x:?} leaves the safe margin |x_i| <= {margin}")]
    RayOutsideMargin { x: [f64; 2], margin: f64 },
    #[error("seed layout mismatch: {0}")]
    Layout(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
