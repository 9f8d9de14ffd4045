use serde::{Deserialize, Serialize};

use super::aubin::{aubin_i, aubin_j, mean_product, JPath};
use crate::discretization::{Field, SphereGrid};
use crate::error::{Error, Result};
use crate::flow::Problem;
use crate::geometry::{divisor_log_weight, mu_of, Twist};

/// Which twist enters the Mabuchi energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MabuchiVariant<'a> {
    /// Twist `(1−γ)θ_ε`.
    TwistedEps,
    /// Twist `(μ_β−μ_γ)ω_{φ_ε} + (1−β)θ_ε`; needs a beta-twisted problem.
    BetaTwistedEps,
    /// The log energy, twist `(1−γ)[D]`, evaluated with `ε = 0` on nodes off `D`.
    Log,
    /// The twisted log energy with `(μ_β−μ_γ)ω_{φ_β} + (1−β)[D]`.
    TwistedLogBeta { beta: f64, phi_beta: &'a Field },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MabuchiKind {
    TwistedEps,
    BetaTwistedEps,
    Log,
    TwistedLogBeta,
}

/// `M(φ) = −μ(I−J) + (1/V)∫log(ω_φ/ω₀)dV_φ − (1/V)∫G(dV₀−dV_φ)` for a
/// zero-order twist potential `G` (with `F₀ = 0`).
pub fn mabuchi_with_forcing(grid: &SphereGrid, phi: &Field, mu: f64, forcing: &Field) -> Result<f64> {
    grid.check(forcing)?;
    let i = aubin_i(grid, phi)?;
    let j = aubin_j(grid, phi, JPath::Linear)?;
    let lap = grid.laplacian(phi)?;
    let entropy: f64 = lap
        .values
        .iter()
        .map(|&l| {
            let d = 1.0 + l;
            d * d.ln()
        })
        .sum::<f64>()
        * grid.weight
        / grid.volume();
    // dV₀ − dV_φ = −Δ₀φ dV₀
    let twist = mean_product(grid, &forcing.values, &lap.values);
    Ok(-mu * (i - j) + entropy + twist)
}

/// The twist potential `G` of a variant.
pub fn mabuchi_forcing(problem: &Problem, variant: MabuchiVariant<'_>) -> Result<Field> {
    let p = &problem.params;
    match variant {
        MabuchiVariant::TwistedEps => Ok(problem.log_weight.map(|w| (1.0 - p.gamma) * w)),
        MabuchiVariant::BetaTwistedEps => match &p.twist {
            Twist::Beta(_) => Ok(problem.forcing.clone()),
            Twist::Plain => Err(Error::Config(
                "the beta-twisted Mabuchi energy needs a beta-twisted problem".into(),
            )),
        },
        MabuchiVariant::Log => {
            let w = divisor_log_weight(&problem.grid, &problem.divisor, 0.0)?;
            Ok(w.map(|v| (1.0 - p.gamma) * v))
        }
        MabuchiVariant::TwistedLogBeta { beta, phi_beta } => {
            let w = divisor_log_weight(&problem.grid, &problem.divisor, 0.0)?;
            let c = mu_of(p.lambda, beta) - p.mu_gamma;
            w.zip(phi_beta, |l, f| c * f + (1.0 - beta) * l)
        }
    }
}

pub fn mabuchi_energy(problem: &Problem, phi: &Field, variant: MabuchiVariant<'_>) -> Result<f64> {
    let g = mabuchi_forcing(problem, variant)?;
    mabuchi_with_forcing(&problem.grid, phi, problem.mu(), &g)
}

/// The variant matching the problem's own flow.
pub fn natural_variant(problem: &Problem) -> MabuchiVariant<'static> {
    match problem.params.twist {
        Twist::Plain => MabuchiVariant::TwistedEps,
        Twist::Beta(_) => MabuchiVariant::BetaTwistedEps,
    }
}
