use serde::{Deserialize, Serialize};

use super::problem::Problem;
use crate::discretization::solve::{solve_laplacian_mean_zero, solve_shifted};
use crate::discretization::{Field, SphereGrid};
use crate::error::{Error, Result};
use crate::geometry::divisor_log_weight;

/// A stalled line search is accepted once the residual is within this
/// factor of the tolerance.
pub const STAGNATION_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub phi: Field,
    pub residual: f64,
    pub iterations: usize,
    /// Additive constant of the `μ = 0` equation `log(1+Δ₀φ) + G = b`.
    pub b: Option<f64>,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// First member of the ε continuation.
    pub start_epsilon: f64,
    /// Continuation stops halving below this and jumps to the target.
    pub epsilon_floor: f64,
    /// Residual accepted at intermediate continuation levels.
    pub intermediate_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iter: 60,
            start_epsilon: 0.5,
            epsilon_floor: 1.0 / 4096.0,
            intermediate_tol: 1e-8,
        }
    }
}

/// ε levels visited on the way to `target`: `0.5, 0.25, …` then `target`.
pub fn continuation_levels(target: f64, opts: &NewtonOptions) -> Vec<f64> {
    let mut out = vec![];
    let mut e = opts.start_epsilon;
    while e > target && e > opts.epsilon_floor {
        out.push(e);
        e *= 0.5;
    }
    out.push(target);
    out
}

fn forcing_at(problem: &Problem, epsilon: f64) -> Result<Field> {
    if epsilon == problem.params.epsilon {
        return Ok(problem.forcing.clone());
    }
    let w = divisor_log_weight(&problem.grid, &problem.divisor, epsilon)?;
    problem.params.forcing(&w)
}

struct Eval {
    ratio: Vec<f64>,
    residual: Vec<f64>,
    sup: f64,
}

fn evaluate(grid: &SphereGrid, mu: f64, g: &[f64], phi: &[f64], b: f64) -> Option<Eval> {
    let mut ratio = vec![0.0; phi.len()];
    grid.laplacian_into(phi, &mut ratio);
    let mut residual = Vec::with_capacity(phi.len());
    let mut sup: f64 = 0.0;
    for k in 0..phi.len() {
        ratio[k] += 1.0;
        let d = ratio[k];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let r = d.ln() + mu * phi[k] + g[k] - b;
        sup = sup.max(r.abs());
        residual.push(r);
    }
    sup.is_finite().then_some(Eval {
        ratio,
        residual,
        sup,
    })
}

/// Damped Newton on `log(1+Δ₀φ) + μφ + G = b` at a fixed forcing.
/// `b` is pinned to zero unless `μ = 0`, where it is an unknown and `φ`
/// is kept mean-zero.
fn newton_fixed(
    grid: &SphereGrid,
    mu: f64,
    g: &[f64],
    mut phi: Vec<f64>,
    tol: f64,
    max_iter: usize,
    epsilon: f64,
) -> Result<(Vec<f64>, f64, f64, usize)> {
    let free_b = mu == 0.0;
    let mut b = 0.0;
    if free_b {
        let m = grid.mean_background(&phi);
        phi.iter_mut().for_each(|v| *v -= m);
        // exact value forced by ∫(1+Δ₀φ) dV₀ = V
        let lo = g.iter().copied().fold(f64::INFINITY, f64::min);
        let s: f64 = g.iter().map(|&x| (lo - x).exp()).sum::<f64>() / g.len() as f64;
        b = lo - s.ln();
    }
    let mut cur = evaluate(grid, mu, g, &phi, b).ok_or(Error::NoConvergence {
        epsilon,
        residual: f64::INFINITY,
        iterations: 0,
    })?;
    for it in 0..max_iter {
        if cur.sup <= tol {
            return Ok((phi, b, cur.sup, it));
        }
        let d = &cur.ratio;
        let f = &cur.residual;
        let (delta, db) = if free_b {
            let num: f64 = d.iter().zip(f).map(|(a, r)| a * r).sum();
            let den: f64 = d.iter().sum();
            let db = num / den;
            let rhs: Vec<f64> = d.iter().zip(f).map(|(a, r)| a * (db - r)).collect();
            (solve_laplacian_mean_zero(grid, &rhs), db)
        } else if mu < 0.0 {
            let c: Vec<f64> = d.iter().map(|a| -mu * a).collect();
            let rhs: Vec<f64> = d.iter().zip(f).map(|(a, r)| a * r).collect();
            (solve_shifted(grid, &c, -1.0, &rhs)?, 0.0)
        } else {
            let c: Vec<f64> = d.iter().map(|a| mu * a).collect();
            let rhs: Vec<f64> = d.iter().zip(f).map(|(a, r)| -a * r).collect();
            (solve_shifted(grid, &c, 1.0, &rhs)?, 0.0)
        };
        let mut tau = 1.0;
        let mut accepted = None;
        while tau >= 1.0 / 1024.0 {
            let trial: Vec<f64> = phi.iter().zip(&delta).map(|(p, q)| p + tau * q).collect();
            let tb = b + tau * db;
            if let Some(e) = evaluate(grid, mu, g, &trial, tb) {
                if e.sup < (1.0 - 1e-4 * tau) * cur.sup {
                    accepted = Some((trial, tb, e));
                    break;
                }
            }
            tau *= 0.5;
        }
        match accepted {
            Some((p, nb, e)) => {
                phi = p;
                b = nb;
                cur = e;
            }
            // no descent left: round-off floor of the Laplacian on fine grids
            None if cur.sup <= STAGNATION_FACTOR * tol => return Ok((phi, b, cur.sup, it)),
            None => {
                return Err(Error::NoConvergence {
                    epsilon,
                    residual: cur.sup,
                    iterations: it,
                })
            }
        }
    }
    if cur.sup <= tol {
        return Ok((phi, b, cur.sup, max_iter));
    }
    Err(Error::NoConvergence {
        epsilon,
        residual: cur.sup,
        iterations: max_iter,
    })
}

/// Stationary solution of the flow at the problem's ε, reached by damped
/// Newton with continuation in ε from `0.5` (or directly from `from`).
pub fn newton_stationary(problem: &Problem, from: Option<&Field>) -> Result<StationarySolution> {
    newton_stationary_with(problem, from, &NewtonOptions::default())
}

pub fn newton_stationary_with(
    problem: &Problem,
    from: Option<&Field>,
    opts: &NewtonOptions,
) -> Result<StationarySolution> {
    let grid = &problem.grid;
    let mu = problem.mu();
    let target = problem.params.epsilon;
    if let Some(f) = from {
        grid.check(f)?;
        let g = forcing_at(problem, target)?;
        if let Ok((phi, b, residual, iterations)) =
            newton_fixed(grid, mu, &g.values, f.values.clone(), opts.tol, opts.max_iter, target)
        {
            return Ok(finish(problem, phi, b, residual, iterations));
        }
    }
    let mut phi = from.map(|f| f.values.clone()).unwrap_or_else(|| vec![0.0; grid.nodes()]);
    let levels = continuation_levels(target, opts);
    let mut total = 0;
    let last = levels.len() - 1;
    for (i, &eps) in levels.iter().enumerate() {
        let g = forcing_at(problem, eps)?;
        let tol = if i == last { opts.tol } else { opts.intermediate_tol.max(opts.tol) };
        let (p, b, residual, its) = newton_fixed(grid, mu, &g.values, phi, tol, opts.max_iter, eps)?;
        total += its;
        phi = p;
        if i == last {
            return Ok(finish(problem, phi, b, residual, total));
        }
    }
    unreachable!("continuation always ends at the target level")
}

fn finish(problem: &Problem, phi: Vec<f64>, b: f64, residual: f64, iterations: usize) -> StationarySolution {
    StationarySolution {
        phi: problem.field(phi),
        residual,
        iterations,
        b: (problem.mu() == 0.0).then_some(b),
        epsilon: problem.params.epsilon,
    }
}
