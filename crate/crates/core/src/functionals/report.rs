use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::aubin::{aubin_i, aubin_j, JPath};
use super::diameter::diameter;
use super::mabuchi::mabuchi_with_forcing;
use super::ricci::{
    grad_u_l2_sq, grad_u_sq, mean_weighted, normalization_mass, trace_ratio, twisted_ricci_potential,
    twisted_scalar_field,
};
use crate::error::{Error, Result};
use crate::flow::{FlowState, Problem};

/// Column order of the CSV time series.
pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "I",
    "J",
    "M",
    "A",
    "alpha",
    "min_twisted_scalar",
    "osc_phi",
    "sup_trace",
    "diam",
    "grad_u_l2",
    "grad_u_inf",
    "u_inf",
    "c_t",
];

/// Every functional and diagnostic at one time.
///
/// `grad_u_l2` is the squared norm `(1/V)∫|∇u|²dV`. `min_twisted_scalar`
/// and `sup_trace` are NaN when `ε = 0`. The last five fields are not
/// part of the CSV: they carry the constant-mode split so that `α` can be
/// handled without its `e^{μt}` growth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub t: f64,
    pub i: f64,
    pub j: f64,
    pub m: f64,
    pub a: f64,
    pub alpha: f64,
    pub min_twisted_scalar: f64,
    pub osc_phi: f64,
    pub sup_trace: f64,
    pub diam: f64,
    pub grad_u_l2: f64,
    pub grad_u_inf: f64,
    pub u_inf: f64,
    pub c_t: f64,
    /// `(1/V)∫φ̇̂ dV`, so that `α = alpha_hat + μK e^ℓ`.
    pub alpha_hat: f64,
    pub offset: f64,
    pub log_growth: f64,
    /// `(1/V)∫e^{−u}dV`.
    pub mass: f64,
    /// `inf ρ_state/ρ_ref`, NaN when `ε = 0`.
    pub inf_trace: f64,
}

impl FunctionalReport {
    pub fn compute(problem: &Problem, state: &FlowState) -> Result<Self> {
        let grid = &problem.grid;
        let phi = &state.phi;
        let mu = problem.mu();
        let i = aubin_i(grid, phi)?;
        let j = aubin_j(grid, phi, JPath::Linear)?;
        let m = mabuchi_with_forcing(grid, phi, mu, &problem.forcing)?;
        let (u, c_t) = twisted_ricci_potential(problem, state);
        let d = &state.ratio.values;
        let a = mean_weighted(
            &u.values.iter().map(|&x| x * (-x).exp()).collect::<Vec<_>>(),
            d,
        );
        let alpha_hat = mean_weighted(&state.phi_dot.values, d);
        let min_twisted_scalar = match problem.theta {
            Some(_) => twisted_scalar_field(problem, phi)?.min(),
            None => f64::NAN,
        };
        let (sup_trace, inf_trace) = match &problem.reference {
            Some(r) => {
                let rho = state.ratio.zip(&problem.rho0, |a, b| a * b)?;
                let lo = rho.zip(r, |a, b| a / b)?.min();
                (trace_ratio(&rho, r)?, lo)
            }
            None => (f64::NAN, f64::NAN),
        };
        let g = grad_u_sq(problem, state);
        Ok(FunctionalReport {
            t: state.t,
            i,
            j,
            m,
            a,
            alpha: alpha_hat + mu * state.kappa(),
            min_twisted_scalar,
            osc_phi: phi.osc(),
            sup_trace,
            diam: diameter(grid, d),
            grad_u_l2: grad_u_l2_sq(problem, state),
            grad_u_inf: g.iter().copied().fold(0.0, f64::max).sqrt(),
            u_inf: u.sup_norm(),
            c_t,
            alpha_hat,
            offset: state.offset,
            log_growth: state.log_growth,
            mass: normalization_mass(&u, &state.ratio),
            inf_trace,
        })
    }

    /// The CSV row in `CSV_COLUMNS` order.
    pub fn csv_values(&self) -> [f64; 14] {
        [
            self.t,
            self.i,
            self.j,
            self.m,
            self.a,
            self.alpha,
            self.min_twisted_scalar,
            self.osc_phi,
            self.sup_trace,
            self.diam,
            self.grad_u_l2,
            self.grad_u_inf,
            self.u_inf,
            self.c_t,
        ]
    }

    /// `α/g` with `g = e^ℓ`, the bounded part of `α` for `μ > 0`.
    pub fn alpha_over_growth(&self, mu: f64) -> f64 {
        self.alpha_hat * (-self.log_growth).exp() + mu * self.offset
    }
}

pub fn reports_to_csv(reports: &[FunctionalReport]) -> String {
    let mut s = CSV_COLUMNS.join(",");
    s.push('\n');
    for r in reports {
        let row: Vec<String> = r.csv_values().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}

pub fn write_csv(path: &Path, reports: &[FunctionalReport]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, reports_to_csv(reports)).map_err(|e| Error::io(path, e))
}
