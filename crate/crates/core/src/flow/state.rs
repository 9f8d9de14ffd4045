use serde::{Deserialize, Serialize};

use super::problem::Problem;
use crate::discretization::{solve::solve_shifted, Field};
use crate::error::{Error, Result};
use crate::geometry::Twist;

/// Number of times a rejected step is retried with half the step size.
pub const MAX_HALVINGS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BumpShape {
    /// `a(2ξ−1)`, the height function.
    Height,
    /// `2a√(ξ(1−ξ)) cos θ`, a horizontal first harmonic (full grids only).
    Tilt,
}

/// Initial potential before the normalizing shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    Constant { value: f64 },
    Bump { shape: BumpShape, amplitude: f64 },
    Field { field: Field },
}

impl InitialData {
    pub fn sample(&self, problem: &Problem) -> Result<Field> {
        let g = &problem.grid;
        match self {
            InitialData::Constant { value } => Ok(g.constant(*value)),
            InitialData::Bump { shape, amplitude } => {
                let a = *amplitude;
                match shape {
                    BumpShape::Height => Ok(g.from_xi(|x| a * (2.0 * x - 1.0))),
                    BumpShape::Tilt => {
                        if g.n_theta == 1 {
                            return Err(Error::Config(
                                "the tilt bump needs a full grid".into(),
                            ));
                        }
                        Ok(g.from_fn(|k| {
                            let x = g.xi_at(k);
                            2.0 * a * (x * (1.0 - x)).sqrt() * g.theta_at(k).cos()
                        }))
                    }
                }
            }
            InitialData::Field { field } => {
                g.check(field)?;
                Ok(field.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub steps: usize,
    pub halvings: usize,
    pub last_dt: f64,
}

/// A point on the flow.
///
/// The potential is stored split as `φ = φ̂ + K·e^ℓ`. For `μ > 0` the
/// constant mode grows like `e^{μt}` while everything geometric depends
/// on `φ̂` only, so `φ̂` is kept mean-zero and the growth is carried by
/// `ℓ`, the discrete propagator `Σ −log(1−μ dt)` of the constant mode.
/// For `μ ≤ 0` the offset stays zero and `φ̂` is the whole potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub phi: Field,
    pub offset: f64,
    pub log_growth: f64,
    /// `1 + Δ₀φ̂`.
    pub ratio: Field,
    /// `log(1+Δ₀φ̂) + μφ̂ + G`; the true `φ̇` adds `μ·κ`.
    pub phi_dot: Field,
    pub stats: StepStats,
}

impl FlowState {
    pub fn assemble(
        problem: &Problem,
        t: f64,
        phi: Field,
        offset: f64,
        log_growth: f64,
        stats: StepStats,
    ) -> Result<Self> {
        problem.grid.check(&phi)?;
        let ratio = problem.density_ratio(&phi.values);
        let phi_dot = problem.rhs(&phi.values, &ratio)?;
        Ok(FlowState {
            t,
            ratio: problem.field(ratio),
            phi_dot: problem.field(phi_dot),
            phi,
            offset,
            log_growth,
            stats,
        })
    }

    /// Constant part `κ = K·e^ℓ`.
    pub fn kappa(&self) -> f64 {
        if self.offset == 0.0 {
            0.0
        } else {
            self.offset * self.log_growth.exp()
        }
    }

    /// The full potential `φ̂ + κ`.
    pub fn potential(&self) -> Field {
        self.phi.add_scalar(self.kappa())
    }

    /// The full time derivative `φ̇ = φ̇̂ + μκ`.
    pub fn full_phi_dot(&self, mu: f64) -> Field {
        self.phi_dot.add_scalar(mu * self.kappa())
    }

    /// `φ_self − φ_other` without forming either full potential when both
    /// share the same constant-mode propagator.
    pub fn potential_difference(&self, other: &FlowState) -> Result<Field> {
        let d = self.phi.zip(&other.phi, |a, b| a - b)?;
        let c = if (self.log_growth - other.log_growth).abs() <= 1e-14 * self.log_growth.abs().max(1.0) {
            (self.offset - other.offset) * self.log_growth.exp()
        } else {
            self.kappa() - other.kappa()
        };
        Ok(d.add_scalar(c))
    }
}

/// Lower bound imposed on `inf φ₀` by the normalizing shift.
pub fn initial_floor(problem: &Problem) -> f64 {
    match &problem.params.twist {
        Twist::Plain => 1.0,
        Twist::Beta(b) => b.phi_one_sup + 1.0,
    }
}

/// Build the `t = 0` state: check admissibility, then shift `φ₀` up only if
/// it violates the normalization floor.
pub fn init_state(problem: &Problem, init: &InitialData) -> Result<FlowState> {
    let phi0 = init.sample(problem)?;
    if !phi0.is_finite() {
        return Err(Error::Config("initial potential has non-finite samples".into()));
    }
    let ratio = problem.density_ratio(&phi0.values);
    let (node, min) = problem.field(ratio).argmin();
    if !(min > 0.0) {
        return Err(Error::Inadmissible { node, min });
    }
    let floor = initial_floor(problem);
    let inf = phi0.min();
    let phi0 = if inf < floor {
        phi0.add_scalar(floor - inf)
    } else {
        phi0
    };
    state_from_potential(problem, 0.0, &phi0)
}

/// Split a full potential into `(φ̂, K)` at `ℓ = 0`.
pub fn state_from_potential(problem: &Problem, t: f64, phi: &Field) -> Result<FlowState> {
    let (hat, offset) = if problem.mu() > 0.0 {
        let m = problem.grid.mean_background(&phi.values);
        (phi.add_scalar(-m), m)
    } else {
        (phi.clone(), 0.0)
    };
    FlowState::assemble(problem, t, hat, offset, 0.0, StepStats::default())
}

fn try_step(problem: &Problem, state: &FlowState, dt: f64) -> Result<FlowState> {
    let mu = problem.mu();
    let damp = 1.0 - dt * mu;
    if !(damp > 0.0) {
        return Err(Error::StepFailure {
            t: state.t,
            reason: format!("dt·μ = {} ≥ 1", dt * mu),
        });
    }
    let d = &state.ratio.values;
    let c: Vec<f64> = d.iter().map(|&v| v * damp).collect();
    let rhs: Vec<f64> = d
        .iter()
        .zip(&state.phi_dot.values)
        .map(|(&v, &f)| v * dt * f)
        .collect();
    let delta = solve_shifted(&problem.grid, &c, -dt, &rhs)?;
    let mut phi: Vec<f64> = state
        .phi
        .values
        .iter()
        .zip(&delta)
        .map(|(a, b)| a + b)
        .collect();
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::StepFailure {
            t: state.t,
            reason: "non-finite potential".into(),
        });
    }
    let log_growth = state.log_growth - (-dt * mu).ln_1p();
    let mut offset = state.offset;
    if mu > 0.0 {
        let m = problem.grid.mean_background(&phi);
        for v in &mut phi {
            *v -= m;
        }
        offset += m * (-log_growth).exp();
    }
    FlowState::assemble(
        problem,
        state.t + dt,
        problem.field(phi),
        offset,
        log_growth,
        state.stats.clone(),
    )
}

/// One linearly implicit Euler step of `φ̇ = log(1+Δ₀φ) + μφ + G`.
///
/// Solves `(D(1−dt μ) − dt Δ₀) δ = D dt φ̇` with `D = 1+Δ₀φ`, which is
/// `(I − dt L) δ = dt φ̇` for the linearization `L = Δ₀·/D + μ` multiplied
/// through by `D`. A step that loses admissibility is retried at half size.
pub fn flow_step(problem: &Problem, state: &FlowState, dt: f64) -> Result<FlowState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Parameter {
            name: "dt",
            value: dt,
            constraint: "must be positive",
        });
    }
    let mut h = dt;
    let mut last = String::new();
    for halvings in 0..=MAX_HALVINGS {
        match try_step(problem, state, h) {
            Ok(mut next) => {
                next.stats.steps += 1;
                next.stats.halvings += halvings;
                next.stats.last_dt = h;
                return Ok(next);
            }
            Err(e) => {
                last = e.to_string();
                h *= 0.5;
            }
        }
    }
    Err(Error::StepFailure {
        t: state.t,
        reason: format!("admissibility lost after {MAX_HALVINGS} halvings: {last}"),
    })
}
