use crate::discretization::{Field, SphereGrid};
use crate::error::{Error, Result};
use crate::flow::{FlowState, Problem, ShiftData};
use crate::geometry::Twist;

/// `log((1/V)∫e^{−f}dV_φ)` given `f` and `D = dV_φ/dV₀`, without overflow.
pub(crate) fn log_mean_exp_neg(f: &[f64], d: &[f64]) -> f64 {
    let lo = f.iter().copied().fold(f64::INFINITY, f64::min);
    let s: f64 = f.iter().zip(d).map(|(&x, &w)| w * (lo - x).exp()).sum();
    -lo + (s / f.len() as f64).ln()
}

/// `(1/V)∫ f dV_φ`.
pub(crate) fn mean_weighted(f: &[f64], d: &[f64]) -> f64 {
    f.iter().zip(d).map(|(a, b)| a * b).sum::<f64>() / f.len() as f64
}

/// `u = φ̇ + c` with `c = log((1/V)∫e^{−φ̇}dV)`, so that `(1/V)∫e^{−u}dV = 1`.
///
/// `u` only sees the cached `φ̇̂`; the returned `c` is for the full `φ̇`.
pub fn twisted_ricci_potential(problem: &Problem, state: &FlowState) -> (Field, f64) {
    let f = &state.phi_dot.values;
    let c_hat = log_mean_exp_neg(f, &state.ratio.values);
    let u = state.phi_dot.add_scalar(c_hat);
    (u, c_hat - problem.mu() * state.kappa())
}

/// `u = log(ω_φ (ε²+|s|²)^{1−γ}/ω₀) + μφ + (twist) + C` straight from `φ`.
pub fn ricci_potential_closed_form(problem: &Problem, phi: &Field) -> Result<Field> {
    let ratio = problem.density_ratio(&phi.values);
    let f = problem.rhs(&phi.values, &ratio)?;
    let c = log_mean_exp_neg(&f, &ratio);
    Ok(problem.field(f.iter().map(|v| v + c).collect()))
}

/// `(1/V)∫e^{−u}dV`, identically one for a normalized `u`.
pub fn normalization_mass(u: &Field, ratio: &Field) -> f64 {
    mean_weighted(&u.values.iter().map(|v| (-v).exp()).collect::<Vec<_>>(), &ratio.values)
}

/// `A = (1/V)∫u e^{−u} dV`.
pub fn a_functional(problem: &Problem, state: &FlowState) -> f64 {
    let (u, _) = twisted_ricci_potential(problem, state);
    let v: Vec<f64> = u.values.iter().map(|&x| x * (-x).exp()).collect();
    mean_weighted(&v, &state.ratio.values)
}

/// `α = (1/V)∫φ̇ dV`, or its shifted version `(1/V)∫ψ̇ dV` read off the
/// shift data of the run.
pub fn alpha_functional(
    problem: &Problem,
    state: &FlowState,
    shifted: bool,
    shift: Option<&ShiftData>,
) -> Result<f64> {
    if shifted {
        let s = shift.ok_or_else(|| Error::Undefined("shifted α needs the shift constant".into()))?;
        return s.alpha_at(state.t).ok_or_else(|| {
            Error::Undefined(format!("t = {} outside the shifted run", state.t))
        });
    }
    Ok(mean_weighted(&state.phi_dot.values, &state.ratio.values) + problem.mu() * state.kappa())
}

/// `|∇u|²_ω` per node; `∇u = ∇φ̇̂` since they differ by a constant.
pub fn grad_u_sq(problem: &Problem, state: &FlowState) -> Vec<f64> {
    let mut g = problem.grid.gradient_sq_background(&state.phi_dot.values);
    for (v, d) in g.iter_mut().zip(&state.ratio.values) {
        *v /= d;
    }
    g
}

pub fn grad_u_sup(problem: &Problem, state: &FlowState) -> Result<f64> {
    Ok(grad_u_sq(problem, state).into_iter().fold(0.0, f64::max).sqrt())
}

/// `‖∇u‖²_{L²} = (1/V)∫|∇u|²_ω dV`.
pub fn grad_u_l2_sq(problem: &Problem, state: &FlowState) -> f64 {
    let g = grad_u_sq(problem, state);
    mean_weighted(&g, &state.ratio.values)
}

/// Twisted scalar curvature `R − (1−γ)tr_ω θ_ε` (beta-twisted problems
/// subtract `(μ_β−μ_γ)tr_ω ω_{φ_ε} + (1−β)tr_ω θ_ε` instead).
pub fn twisted_scalar_field(problem: &Problem, phi: &Field) -> Result<Field> {
    let theta = problem.theta.as_ref().ok_or(Error::Parameter {
        name: "epsilon",
        value: problem.params.epsilon,
        constraint: "twisted scalar curvature needs ε > 0",
    })?;
    let grid: &SphereGrid = &problem.grid;
    let ratio = problem.density_ratio(&phi.values);
    if let Some(k) = ratio.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::MetricDegenerate {
            node: k,
            value: ratio[k],
        });
    }
    let log_ratio: Vec<f64> = ratio.iter().map(|d| d.ln()).collect();
    let mut lap_log = vec![0.0; ratio.len()];
    grid.laplacian_into(&log_ratio, &mut lap_log);
    let a = problem.params.weight_exponent();
    let extra = match &problem.params.twist {
        Twist::Plain => None,
        Twist::Beta(b) => {
            let lap = grid.laplacian(&b.phi_eps)?;
            let c = b.mu_beta - problem.params.mu_gamma;
            Some(lap.map(|l| c * (1.0 + l)))
        }
    };
    let vals = (0..ratio.len())
        .map(|k| {
            let mut num = 1.0 - lap_log[k] - a * theta.values[k] / problem.rho0.values[k];
            if let Some(e) = &extra {
                num -= e.values[k];
            }
            num / ratio[k]
        })
        .collect();
    Ok(problem.field(vals))
}

/// `sup ρ_state/ρ_ref`, the trace of the state metric against a reference in
/// complex dimension one.
pub fn trace_ratio(state_density: &Field, reference: &Field) -> Result<f64> {
    let r = state_density.zip(reference, |a, b| a / b)?;
    if let Some(k) = reference.values.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::MetricDegenerate {
            node: k,
            value: reference.values[k],
        });
    }
    Ok(r.max())
}
