use serde::{Deserialize, Serialize};

use super::{CheckOutcome, Location};
use crate::error::{Error, Result};
use crate::flow::{flow_step, init_state, InitialData, Problem};
use crate::geometry::Twist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// `φ_{ε₁} ≥ φ_{ε₂}` for `ε₁ > ε₂`.
    Eps,
    /// `φ_{γ₁} ≤ φ_{γ₂}` for `γ₁ < γ₂`, on a short time window.
    Gamma,
}

fn comparable(kind: PairKind, lower: &Problem, upper: &Problem) -> Result<()> {
    let (g, h) = (&lower.grid, &upper.grid);
    if (g.mode, g.n_xi, g.n_theta) != (h.mode, h.n_xi, h.n_theta) {
        return Err(Error::Comparison("the two problems use different grids".into()));
    }
    if lower.divisor != upper.divisor {
        return Err(Error::Comparison("the two problems use different divisors".into()));
    }
    let (a, b) = (&lower.params, &upper.params);
    if a.twist != Twist::Plain || b.twist != Twist::Plain {
        return Err(Error::Comparison("ordering checks compare plain flows".into()));
    }
    let ok = match kind {
        PairKind::Eps => a.gamma == b.gamma && a.epsilon < b.epsilon,
        PairKind::Gamma => a.epsilon == b.epsilon && a.gamma < b.gamma,
    };
    if !ok {
        return Err(Error::Comparison(format!(
            "{kind:?} ordering needs matching other parameters and lower < upper"
        )));
    }
    Ok(())
}

/// Step both flows from the same initial data with the same `dt` and check
/// `φ_upper − φ_lower ≥ −slack` at every step up to `window`.
///
/// Stepping continues to `observe_until` so that the notes can report how
/// long the ordering actually persisted.
pub fn check_pair_ordering(
    kind: PairKind,
    lower: &Problem,
    upper: &Problem,
    init: &InitialData,
    dt: f64,
    window: f64,
    observe_until: f64,
    slack: f64,
) -> Result<CheckOutcome> {
    comparable(kind, lower, upper)?;
    let (id, anchor) = match kind {
        PairKind::Eps => ("eps-ordering", "flow potentials decrease as eps decreases"),
        PairKind::Gamma => ("gamma-ordering", "flow potentials increase with gamma for short time"),
    };
    let mut a = init_state(lower, init)?;
    let mut b = init_state(upper, init)?;
    let end = window.max(observe_until);
    let mut worst = (f64::INFINITY, 0.0, 0usize);
    let mut held_until = None;
    let steps = (end / dt).round() as usize;
    for _ in 0..steps {
        a = flow_step(lower, &a, dt)?;
        b = flow_step(upper, &b, dt)?;
        if a.stats.last_dt != b.stats.last_dt {
            return Err(Error::Comparison(format!("step sizes diverged at t = {}", a.t)));
        }
        let diff = b.potential().zip(&a.potential(), |x, y| x - y)?;
        let (node, m) = diff.argmin();
        if m < -slack && held_until.is_none() {
            held_until = Some(a.t - a.stats.last_dt);
        }
        if a.t <= window * (1.0 + 1e-12) && m < worst.0 {
            worst = (m, a.t, node);
        }
    }
    let persisted = match held_until {
        Some(t) => format!("ordering held up to t = {t:.4}"),
        None => format!("ordering held through t = {:.4}", a.t),
    };
    Ok(CheckOutcome::measured(
        id,
        anchor,
        worst.0,
        slack,
        Location::node(worst.1, worst.2),
        format!("min(phi_upper - phi_lower) = {:.3e} for t <= {window}; {persisted}", worst.0),
    ))
}
