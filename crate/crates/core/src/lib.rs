//! Regularized twisted and conical Kähler-Ricci flows on the Riemann sphere.
//!
//! The sphere is covered by one chart `z ∈ ℂ` together with the point at
//! infinity. All fields are sampled on a cell-centered grid in
//! `ξ = |z|²/(1+|z|²)` (and the angle `θ` in the full two-dimensional mode),
//! which makes the background volume form uniform and keeps both poles off
//! the grid.

pub mod cli;
pub mod discretization;
pub mod flow;
pub mod functionals;
pub mod geometry;
pub mod validation;

mod error;

pub use error::{Error, Result};
