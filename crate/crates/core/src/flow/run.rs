use serde::{Deserialize, Serialize};

use super::problem::Problem;
use super::state::{flow_step, init_state, FlowState, InitialData};
use crate::error::{Error, Result};
use crate::functionals::{grad_u_sup, FunctionalReport};

/// Runs whose oscillation exceeds this are declared diverged.
pub const DIVERGENCE_OSC: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Stop once `‖∇u‖_∞` falls to this.
    pub conv_tol: f64,
    /// Report every this many accepted steps.
    pub report_stride: usize,
    /// Multiplier applied to `dt` after every accepted step.
    pub dt_growth: f64,
    pub dt_max: Option<f64>,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            dt: 1e-3,
            t_max: 200.0,
            conv_tol: 1e-7,
            report_stride: 10,
            dt_growth: 1.0,
            dt_max: None,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, constraint| Err(Error::Parameter { name, value, constraint });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", self.dt, "must be positive");
        }
        if !(self.t_max >= 0.0) {
            return bad("t_max", self.t_max, "must be nonnegative");
        }
        if !(self.conv_tol > 0.0) {
            return bad("conv_tol", self.conv_tol, "must be positive");
        }
        if self.report_stride == 0 {
            return bad("report_stride", 0.0, "must be at least 1");
        }
        if !(self.dt_growth >= 1.0) {
            return bad("dt_growth", self.dt_growth, "must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Converged,
    MaxTime,
    Diverged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub reports: Vec<FunctionalReport>,
    pub final_state: FlowState,
    pub status: RunStatus,
    /// Reason for a divergence, if any.
    pub note: Option<String>,
}

pub fn run_flow(problem: &Problem, init: &InitialData, cfg: &StepConfig) -> Result<RunResult> {
    let state = init_state(problem, init)?;
    run_flow_from(problem, state, cfg)
}

/// Step from `state` until convergence, `t_max`, or divergence.
pub fn run_flow_from(problem: &Problem, mut state: FlowState, cfg: &StepConfig) -> Result<RunResult> {
    cfg.validate()?;
    if problem.params.epsilon <= 0.0 {
        return Err(Error::Parameter {
            name: "epsilon",
            value: problem.params.epsilon,
            constraint: "time stepping needs ε > 0",
        });
    }
    let mut reports = vec![];
    if cfg.t_max <= state.t {
        return Ok(RunResult {
            reports,
            final_state: state,
            status: RunStatus::MaxTime,
            note: None,
        });
    }
    reports.push(FunctionalReport::compute(problem, &state)?);
    let mut dt = cfg.dt;
    let mut since_report = 0;
    let mut note = None;
    let status = loop {
        if grad_u_sup(problem, &state)? <= cfg.conv_tol {
            break RunStatus::Converged;
        }
        let remaining = cfg.t_max - state.t;
        if remaining <= 1e-12 * cfg.t_max.max(1.0) {
            break RunStatus::MaxTime;
        }
        let h = if remaining < 1.5 * dt { remaining } else { dt };
        match flow_step(problem, &state, h) {
            Ok(next) => state = next,
            Err(e) => {
                note = Some(e.to_string());
                break RunStatus::Diverged;
            }
        }
        if !(state.phi.osc() <= DIVERGENCE_OSC) {
            note = Some(format!("oscillation {:e} exceeds {DIVERGENCE_OSC:e}", state.phi.osc()));
            break RunStatus::Diverged;
        }
        since_report += 1;
        if since_report == cfg.report_stride {
            reports.push(FunctionalReport::compute(problem, &state)?);
            since_report = 0;
        }
        dt *= cfg.dt_growth;
        if let Some(m) = cfg.dt_max {
            dt = dt.min(m);
        }
    };
    if reports.last().map_or(true, |r| r.t < state.t) && state.phi.is_finite() {
        reports.push(FunctionalReport::compute(problem, &state)?);
    }
    Ok(RunResult {
        reports,
        final_state: state,
        status,
        note,
    })
}
