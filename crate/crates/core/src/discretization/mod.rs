//! Sphere grids, the background Laplacian, gradient energy and quadrature.

mod field;
mod grid;
pub mod solve;

pub use field::Field;
pub use grid::{AngularScheme, GridMode, SphereGrid, MIN_N_THETA, MIN_N_XI, VOLUME};

pub fn build_grid(mode: GridMode, n_xi: usize, n_theta: usize) -> crate::Result<SphereGrid> {
    SphereGrid::build(mode, n_xi, n_theta)
}
