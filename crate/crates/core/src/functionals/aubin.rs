use serde::{Deserialize, Serialize};

use crate::discretization::{Field, SphereGrid};
use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, 8 points.
pub(crate) const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JPath {
    /// `φ_t = tφ`
    Linear,
    /// `φ_t = t²φ`
    Quadratic,
}

fn admissible_laplacian(grid: &SphereGrid, phi: &Field) -> Result<Field> {
    let lap = grid.laplacian(phi)?;
    let (node, min) = lap.argmin();
    if !(1.0 + min > 0.0) {
        return Err(Error::MetricDegenerate {
            node,
            value: 1.0 + min,
        });
    }
    Ok(lap)
}

/// `(1/V)∫ f · g dV₀` for two sampled functions.
pub(crate) fn mean_product(grid: &SphereGrid, f: &[f64], g: &[f64]) -> f64 {
    grid.integrate_ratio(f, g) / grid.volume()
}

/// `I(φ) = (1/V)∫φ(dV₀ − dV_φ) = −(1/V)∫φΔ₀φ dV₀`.
pub fn aubin_i(grid: &SphereGrid, phi: &Field) -> Result<f64> {
    let lap = admissible_laplacian(grid, phi)?;
    Ok(-mean_product(grid, &phi.values, &lap.values))
}

/// `J(φ) = (1/V)∫₀¹∫φ̇_t(dV₀ − dV_{φ_t})dt` along the chosen path from 0.
pub fn aubin_j(grid: &SphereGrid, phi: &Field, path: JPath) -> Result<f64> {
    admissible_laplacian(grid, phi)?;
    let (speed, along): (fn(f64) -> f64, fn(f64) -> f64) = match path {
        JPath::Linear => (|_| 1.0, |t| t),
        JPath::Quadratic => (|t| 2.0 * t, |t| t * t),
    };
    let attempt = aubin_j_along(grid, |t| {
        (phi.map(|v| along(t) * v), phi.map(|v| speed(t) * v))
    });
    match attempt {
        Err(Error::MetricDegenerate { .. }) if path != JPath::Linear => {
            aubin_j(grid, phi, JPath::Linear)
        }
        other => other,
    }
}

/// `J` along an arbitrary path given as `t ↦ (φ_t, φ̇_t)` with `φ_0` constant.
pub fn aubin_j_along(grid: &SphereGrid, path: impl Fn(f64) -> (Field, Field)) -> Result<f64> {
    let mut j = 0.0;
    for &(x, w) in &GL8 {
        let t = 0.5 * (x + 1.0);
        let (p, v) = path(t);
        let lap = admissible_laplacian(grid, &p)?;
        j -= 0.5 * w * mean_product(grid, &v.values, &lap.values);
    }
    Ok(j)
}
