use serde::{Deserialize, Serialize};

use crate::discretization::{Field, SphereGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalizationKind<'a> {
    /// `C_{β,ε}`: `(1/V)∫e^{C}dV₀/(ε²+|s|²)^{1−β} = 1`.
    CBetaEps { beta: f64, epsilon: f64 },
    /// `Ĉ_β`: the same at `ε = 0`, on nodes off the divisor.
    CHatBeta { beta: f64 },
    /// `ξ_β`: `(1/V)∫e^{−μ_βφ_β+ξ}dV₀/|s|^{2(1−β)} = 1`.
    XiBeta {
        beta: f64,
        mu_beta: f64,
        phi_beta: &'a Field,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationName {
    XiBeta,
    CBetaEps,
    CHatBeta,
}

/// `−log((1/V)∫e^{−x}dV₀)`.
pub fn log_normalizer(x: &[f64]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = x.iter().map(|&v| (lo - v).exp()).sum::<f64>() / x.len() as f64;
    lo - s.ln()
}

/// Evaluate a normalization constant from `|s|²_h` on the grid.
pub fn normalization_constant(grid: &SphereGrid, modulus: &Field, kind: NormalizationKind<'_>) -> Result<f64> {
    grid.check(modulus)?;
    let log_w = |e2: f64| -> Result<Vec<f64>> {
        modulus
            .values
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                if s + e2 > 0.0 {
                    Ok((s + e2).ln())
                } else {
                    Err(Error::Singular {
                        node: k,
                        what: "divisor weight vanishes on a node; refine or offset the grid",
                    })
                }
            })
            .collect()
    };
    match kind {
        NormalizationKind::CBetaEps { beta, epsilon } => {
            let w = log_w(epsilon * epsilon)?;
            Ok(log_normalizer(&w.iter().map(|l| (1.0 - beta) * l).collect::<Vec<_>>()))
        }
        NormalizationKind::CHatBeta { beta } => {
            let w = log_w(0.0)?;
            Ok(log_normalizer(&w.iter().map(|l| (1.0 - beta) * l).collect::<Vec<_>>()))
        }
        NormalizationKind::XiBeta {
            beta,
            mu_beta,
            phi_beta,
        } => {
            grid.check(phi_beta)?;
            let w = log_w(0.0)?;
            let x: Vec<f64> = w
                .iter()
                .zip(&phi_beta.values)
                .map(|(l, p)| mu_beta * p + (1.0 - beta) * l)
                .collect();
            Ok(log_normalizer(&x))
        }
    }
}
