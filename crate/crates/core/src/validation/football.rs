use super::{CheckOutcome, Location};
use crate::flow::{Problem, RunResult, RunStatus};

/// Density of the football metric with cone angle `2πβ` at `0` and `∞`,
/// `2β r^{2β−2}/(1+r^{2β})²` with `r² = ξ/(1−ξ)`.
pub fn football_density(xi: f64, beta: f64) -> f64 {
    density_at_radius((xi / (1.0 - xi)).sqrt(), beta)
}

fn density_at_radius(r: f64, beta: f64) -> f64 {
    let rb = r.powf(2.0 * beta);
    2.0 * beta * rb / (r * r) / (1.0 + rb).powi(2)
}

/// Largest relative deviation of `D·ρ₀` from the football density on nodes
/// with `|s|² ≥ collar`, and the node where it occurs.
pub fn football_error(problem: &Problem, ratio: &[f64], beta: f64, collar: f64) -> (f64, usize) {
    let grid = &problem.grid;
    let mut worst = (0.0, 0);
    for k in 0..grid.nodes() {
        if problem.modulus.values[k] < collar {
            continue;
        }
        let rho = ratio[k] * problem.rho0.values[k];
        let e = (rho / football_density(grid.xi_at(k), beta) - 1.0).abs();
        if e > worst.0 {
            worst = (e, k);
        }
    }
    worst
}

pub struct FootballEntry<'a> {
    pub epsilon: f64,
    pub problem: &'a Problem,
    pub run: &'a RunResult,
}

/// Relative density error against the football metric along a decreasing ε
/// sequence: it must decrease with ε and end below `tol`.
pub fn check_football(entries: &[FootballEntry<'_>], beta: f64, tol: f64) -> CheckOutcome {
    const ID: &str = "football";
    const ANCHOR: &str = "conical limit on two antipodal points is the football metric";
    const COLLAR: f64 = 0.05;
    if entries.is_empty() {
        return CheckOutcome::inconclusive(ID, ANCHOR, "empty epsilon sequence");
    }
    for e in entries {
        let p = &e.problem.params;
        let d = &e.problem.divisor;
        if p.lambda != 1.0 || !d.is_axisymmetric() || (p.gamma - beta).abs() > 1e-15 {
            return CheckOutcome::inconclusive(ID, ANCHOR, "needs lambda = 1, a polar divisor and gamma = beta");
        }
        if e.run.status != RunStatus::Converged {
            return CheckOutcome::inconclusive(
                ID,
                ANCHOR,
                format!("run at eps = {} did not converge ({:?})", e.epsilon, e.run.status),
            );
        }
    }
    if entries.windows(2).any(|w| w[1].epsilon >= w[0].epsilon) {
        return CheckOutcome::inconclusive(ID, ANCHOR, "epsilon sequence must decrease");
    }
    let errs: Vec<(f64, usize)> = entries
        .iter()
        .map(|e| football_error(e.problem, &e.run.final_state.ratio.values, beta, COLLAR))
        .collect();
    let table = entries
        .iter()
        .zip(&errs)
        .map(|(e, (err, _))| format!("eps {}: {:.3}%", e.epsilon, 100.0 * err))
        .collect::<Vec<_>>()
        .join(", ");
    let (last, node) = *errs.last().expect("nonempty");
    let mut margin = tol - last;
    let mut notes = format!("density error trend [{table}], tolerance {:.1}%", 100.0 * tol);
    let drop = errs.windows(2).map(|w| w[0].0 - w[1].0).fold(f64::INFINITY, f64::min);
    if drop < 0.0 {
        margin = margin.min(drop);
        notes.push_str("; error is not monotone in eps");
    }
    let t = entries.last().expect("nonempty").run.final_state.t;
    CheckOutcome::measured(ID, ANCHOR, margin, 0.0, Location::node(t, node), notes)
}
