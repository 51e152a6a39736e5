//! Numerical workbench for composed-exponential nonlinear wave functions.
//!
//! A nonlinear state is an outer function applied to an ordinary wave
//! function, `ψ_non = outer(φ)`. The modules here sample such states on 1D
//! grids, apply quantum differential operators to them, evolve them in time,
//! and recover the inner wave function again, reporting every identity check
//! as a [`ResidualReport`].

pub mod correspondence;
pub mod error;
pub mod gridcore;
pub mod npde;
pub mod operators;
pub mod phase;
pub mod report;
pub mod special;
pub mod states;

pub use error::{Error, Result};
pub use gridcore::{ComplexField, DiffScheme, Grid1D, GridMeta, PhysicalConstants, StencilOrder};
pub use num_complex::Complex64;
pub use report::ResidualReport;
pub use states::{NonlinearState, OuterFunction, OuterKind, PlaneWaveParams};
