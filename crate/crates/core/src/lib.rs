//! Representation formulas for the wave equation in the Einstein-de Sitter
//! spacetime,
//!
//! ```text
//! ψ_tt - t^{-4/3} Δψ + (2/t) ψ_t = f(x, t),   t > 0,  x ∈ ℝⁿ,  n ≤ 3,
//! ```
//!
//! with weighted initial data at the singular time `t = 0`, together with
//! finite-difference oracles and Lᵖ-Lᵠ decay diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod edes;
pub mod error;
pub mod free_wave;
pub mod grid;
pub mod norm_lab;
pub mod oracle_fd;
pub mod quadrature;
pub mod space;

pub use data::{
    SingularityClass, SingularityKind, SmoothData, SourceFunction, SourceTerm, TimePower,
};
pub use edes::{solve, ProblemSpec};
pub use error::{Error, Result};
pub use free_wave::{eval_free_wave, FreeWaveSample};
pub use grid::{Grid, GridField};
pub use quadrature::{QuadratureConfig, QuadratureResult};
pub use space::{Point, SpatialDim};
