//! Numerical laboratory for the generalized derivative nonlinear
//! Schroedinger equation `i u_t + u_xx + i |u|^(2 sigma) u_x = 0`.
//!
//! The crate provides:
//! - a periodic pseudospectral core (derivatives, left antiderivatives,
//!   Sobolev and space-time norms, the free Schroedinger group),
//! - the closed-form soliton family and multi-soliton profiles with their
//!   interaction residual,
//! - the gauge transform to a derivative-free coupled system and its
//!   nonlinearities,
//! - two time integrators for the equation,
//! - a Duhamel fixed-point solver that builds multi-soliton solutions and
//!   measures their exponential approach to the profile.

// validations use `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also
// rejects NaN inputs
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod field;
pub mod fit;
pub mod fourier;
pub mod gauge;
pub mod grid;
pub mod io;
pub mod multisoliton;
pub mod norms;
pub mod par;
pub mod picard;
pub mod random;
pub mod soliton;
pub mod spacetime;
pub mod util;

pub use error::{Error, Result};
pub use field::ComplexField;
pub use grid::{build_grid, SpatialGrid, TimeGrid};
pub use multisoliton::MultiSolitonConfig;
pub use soliton::SolitonParams;
