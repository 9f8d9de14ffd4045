use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{CheckOutcome, Location};
use crate::discretization::{Field, GridMode, SphereGrid};
use crate::error::Result;
use crate::functionals::{aubin_i, aubin_j, aubin_j_along, JPath};

fn embedding(grid: &SphereGrid, k: usize) -> [f64; 3] {
    let xi = grid.xi_at(k);
    let s = 2.0 * (xi * (1.0 - xi)).sqrt();
    let th = grid.theta_at(k);
    [s * th.cos(), s * th.sin(), 1.0 - 2.0 * xi]
}

fn basis(grid: &SphereGrid, k: usize) -> Vec<f64> {
    let [x, y, z] = embedding(grid, k);
    match grid.mode {
        GridMode::Axisym1D => vec![z, z * z, z * z * z, z.powi(4)],
        GridMode::Full2D => vec![x, y, z, x * y, x * z, y * z, x * x - y * y, z * z, x * z * z, y * y * y],
    }
}

/// A random smooth potential with `min(1+Δ₀φ) ≥ floor`, built from
/// low-degree polynomials in the ambient coordinates of the round sphere.
pub fn random_admissible_potential(grid: &SphereGrid, rng: &mut impl Rng, floor: f64) -> Result<Field> {
    let m = basis(grid, 0).len();
    let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let f = grid.from_fn(|k| basis(grid, k).iter().zip(&c).map(|(b, a)| a * b).sum());
    let lo = grid.laplacian(&f)?.min();
    let u = rng.gen_range(0.3..1.0);
    let scale = if lo < 0.0 { u * (1.0 - floor) / -lo } else { u };
    let shift = rng.gen_range(-1.0..1.0);
    Ok(f.map(|v| scale * v + shift))
}

/// `I`, and `J` along three different paths from 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgebraSample {
    pub i: f64,
    pub j_linear: f64,
    pub j_quadratic: f64,
    /// Along `tφ + t(1−t)ψ` for another admissible `ψ`.
    pub j_bent: f64,
}

fn sample(grid: &SphereGrid, phi: &Field, psi: &Field) -> Result<AlgebraSample> {
    let j_bent = aubin_j_along(grid, |t| {
        let p = phi.zip(psi, |a, b| t * a + t * (1.0 - t) * b).expect("same grid");
        let v = phi.zip(psi, |a, b| a + (1.0 - 2.0 * t) * b).expect("same grid");
        (p, v)
    })?;
    Ok(AlgebraSample {
        i: aubin_i(grid, phi)?,
        j_linear: aubin_j(grid, phi, JPath::Linear)?,
        j_quadratic: aubin_j(grid, phi, JPath::Quadratic)?,
        j_bent,
    })
}

/// Aubin chain `0 ≤ J ≤ I/2 ≤ J` (slack `1e−9`) and path independence of
/// `J` (within `1e−6`) on `count` seeded random admissible potentials.
pub fn check_functional_algebra(grid: &SphereGrid, count: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chain = (f64::INFINITY, 0);
    let mut path = (0.0f64, 0);
    for n in 0..count {
        let phi = random_admissible_potential(grid, &mut rng, 0.1)?;
        let psi = random_admissible_potential(grid, &mut rng, 0.1)?;
        let s = sample(grid, &phi, &psi)?;
        let m = s.j_linear.min(0.5 * s.i - s.j_linear).min(s.j_linear - 0.5 * s.i);
        if m < chain.0 {
            chain = (m, n);
        }
        let d = (s.j_quadratic - s.j_linear).abs().max((s.j_bent - s.j_linear).abs());
        if d > path.0 {
            path = (d, n);
        }
    }
    Ok(vec![
        CheckOutcome::measured(
            "aubin-chain",
            "0 <= J/n <= I/(n+1) <= J",
            chain.0,
            1e-9,
            Location::default(),
            format!("worst chain margin {:.3e} on sample {} of {count}", chain.0, chain.1),
        ),
        CheckOutcome::measured(
            "j-path-independence",
            "J is independent of the path joining 0 to phi",
            1e-6 - path.0,
            0.0,
            Location::default(),
            format!("largest path discrepancy {:.3e} on sample {} of {count}", path.0, path.1),
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_potentials_are_admissible_and_seeded() {
        for grid in [SphereGrid::axisym(64).unwrap(), SphereGrid::full(24, 48).unwrap()] {
            let mut a = ChaCha8Rng::seed_from_u64(7);
            let mut b = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..5 {
                let p = random_admissible_potential(&grid, &mut a, 0.1).unwrap();
                let q = random_admissible_potential(&grid, &mut b, 0.1).unwrap();
                assert_eq!(p, q);
                assert!(grid.laplacian(&p).unwrap().min() >= -0.9 - 1e-12);
            }
        }
    }

    #[test]
    fn algebra_checks_pass_on_both_grid_modes() {
        for grid in [SphereGrid::axisym(128).unwrap(), SphereGrid::full(24, 48).unwrap()] {
            for o in check_functional_algebra(&grid, 20, 11).unwrap() {
                assert!(o.pass, "{}", o.summary_line());
            }
        }
    }

    #[test]
    fn bent_path_is_a_genuinely_different_path() {
        let grid = SphereGrid::axisym(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = random_admissible_potential(&grid, &mut rng, 0.1).unwrap();
        let psi = random_admissible_potential(&grid, &mut rng, 0.1).unwrap();
        let s = sample(&grid, &phi, &psi).unwrap();
        assert!((s.j_bent - s.j_linear).abs() < 1e-9);
        assert!(s.i > 0.0 && s.j_linear > 0.0);
    }
}
