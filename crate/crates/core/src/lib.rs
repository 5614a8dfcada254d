//! Numerical laboratory for the 2D incompressible Euler equations in
//! vorticity form.

pub mod config;
pub mod diagnostics;
pub mod field;
pub mod grid;
pub mod initial;
pub mod lagrangian;
pub mod norms;
pub mod quadrature;
pub mod run;
pub mod sample;
pub mod snapshot;
pub mod solver;
pub mod spectral;

mod fft;

pub use field::{parity_defect, FieldError, ParityDefect, ScalarField, VectorField};
pub use grid::GridSpec;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/fields.md")]
    struct Fields;
    #[doc = include_str!("../../../book/src/initial-data.md")]
    struct InitialData;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/lagrangian.md")]
    struct Lagrangian;
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    struct Diagnostics;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
