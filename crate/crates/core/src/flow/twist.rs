use serde::{Deserialize, Serialize};

use super::newton::{newton_stationary, StationarySolution};
use super::problem::Problem;
use crate::discretization::{solve::solve_shifted, Field, SphereGrid};
use crate::error::{Error, Result};
use crate::geometry::{mu_of, DivisorData, FlowParams};

/// Backward-Euler substeps used to realize `e^{τΔ₀}`.
pub const HEAT_SUBSTEPS: usize = 64;

/// The conical KE potential at angle `β` and the smoothed family built from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistData {
    pub beta: f64,
    pub mu_beta: f64,
    /// Normalized so that `sup φ_β = −1`.
    pub phi_beta: Field,
    /// Constant in `(1+Δ₀φ_β) = e^{−μ_β φ_β + ξ_β}/|s|^{2(1−β)}`.
    pub xi_beta: f64,
    pub residual: f64,
    /// Smoothed members `(ε, φ_ε)` produced so far, sorted by ε.
    pub members: Vec<(f64, Field)>,
}

impl TwistData {
    /// Solve the conical equation `log(1+Δ₀φ) + μ_β φ + (1−β) log|s|² = 0`
    /// on the grid (nodes are off the divisor) and normalize.
    pub fn solve(grid: &SphereGrid, divisor: &DivisorData, beta: f64) -> Result<Self> {
        let params = FlowParams::plain(divisor.lambda(), beta, 0.0, 0.0)?;
        if !(params.mu_gamma > 0.0) {
            return Err(Error::Parameter {
                name: "beta",
                value: beta,
                constraint: "the twisted construction needs μ_β > 0",
            });
        }
        let problem = Problem::new(grid.clone(), divisor.clone(), params)?;
        let sol: StationarySolution = newton_stationary(&problem, None)?;
        let shift = -1.0 - sol.phi.max();
        Ok(TwistData {
            beta,
            mu_beta: mu_of(divisor.lambda(), beta),
            phi_beta: sol.phi.add_scalar(shift),
            xi_beta: problem.mu() * shift,
            residual: sol.residual,
            members: vec![],
        })
    }

    pub fn member(&self, epsilon: f64) -> Option<&Field> {
        self.members.iter().find(|(e, _)| *e == epsilon).map(|(_, f)| f)
    }
}

/// `(I − (τ/m)Δ₀)^{−m} f`, a positivity preserving approximation of `e^{τΔ₀}f`.
pub fn heat_flow(grid: &SphereGrid, f: &Field, tau: f64) -> Result<Field> {
    grid.check(f)?;
    if tau == 0.0 {
        return Ok(f.clone());
    }
    let ones = vec![1.0; f.len()];
    let s = -tau / HEAT_SUBSTEPS as f64;
    let mut v = f.values.clone();
    for _ in 0..HEAT_SUBSTEPS {
        v = solve_shifted(grid, &ones, s, &v)?;
    }
    Field::new(f.n_xi, f.n_theta, v)
}

/// Smooth `φ_β` at scale ε: `φ_ε = e^{ε²Δ₀}φ_β + ε²`.
///
/// The heat flow preserves `1+Δ₀φ ≥ 0` and `d/dτ e^{τΔ₀}φ ≥ −1`, so the
/// family is admissible, nonpositive for `ε ≤ 1` and decreasing as ε
/// decreases. Members are also clamped against earlier ones so the
/// ordering survives round-off.
pub fn smooth_approx_potential(grid: &SphereGrid, twist: &mut TwistData, epsilon: f64) -> Result<Field> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Parameter {
            name: "epsilon",
            value: epsilon,
            constraint: "smoothing scale must be positive",
        });
    }
    if let Some(f) = twist.member(epsilon) {
        return Ok(f.clone());
    }
    let mut tau = epsilon * epsilon;
    for _ in 0..6 {
        let mut v = heat_flow(grid, &twist.phi_beta, tau)?.add_scalar(epsilon * epsilon);
        let top = v.max();
        if top > 0.0 {
            v = v.add_scalar(-top);
        }
        for (e, m) in &twist.members {
            if *e > epsilon {
                v = v.zip(m, f64::min)?;
            } else {
                v = v.zip(m, f64::max)?;
            }
        }
        let lap = grid.laplacian(&v)?;
        if lap.min() > -1.0 {
            let pos = twist.members.partition_point(|(e, _)| *e < epsilon);
            twist.members.insert(pos, (epsilon, v.clone()));
            return Ok(v);
        }
        tau *= 2.0;
    }
    Err(Error::Smoothing(format!(
        "no admissible smoothing at ε = {epsilon} up to τ = {tau}"
    )))
}

/// Parameters of the β-twisted flow at `(γ, ε)` built on `twist`.
pub fn beta_twisted_params(
    grid: &SphereGrid,
    divisor: &DivisorData,
    twist: &mut TwistData,
    gamma: f64,
    epsilon: f64,
) -> Result<FlowParams> {
    let phi_eps = smooth_approx_potential(grid, twist, epsilon)?;
    let phi_one_sup = smooth_approx_potential(grid, twist, 1.0)?.max();
    let k = crate::geometry::select_k(grid, divisor, twist.beta, epsilon)?;
    FlowParams::beta_twisted(divisor.lambda(), gamma, twist.beta, epsilon, k, phi_eps, phi_one_sup)
}
