use serde::{Deserialize, Serialize};

use super::{CheckOutcome, Location};
use crate::error::Result;
use crate::flow::{FlowState, Problem, RunResult, RunStatus, ShiftData, StationarySolution};
use crate::functionals::{mean_weighted, FunctionalReport};

/// Complex dimension.
const DIM: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotone {
    /// `A` nondecreasing, for `μ > 0`.
    A,
    /// Mabuchi energy nonincreasing.
    Mabuchi,
}

fn late(run: &RunResult) -> impl Iterator<Item = &FunctionalReport> {
    run.reports.iter().filter(|r| r.t >= 1.0)
}

/// Twisted scalar curvature `≥ −4n − slack` at every report with `t ≥ 1`.
///
/// For `μ > 0` the notes also record whether the sharper `−4n e^{−μ(t−1)}`
/// trend holds.
pub fn check_scalar_lower_bound(run: &RunResult, mu: f64, slack: f64) -> CheckOutcome {
    const ID: &str = "scalar-lower-bound";
    const ANCHOR: &str = "twisted scalar curvature bounded below by -4n for t >= 1";
    let floor = -4.0 * DIM;
    let mut worst: Option<(f64, f64)> = None;
    let mut trend = f64::INFINITY;
    for r in late(run) {
        let s = r.min_twisted_scalar;
        if !s.is_finite() {
            continue;
        }
        if worst.map_or(true, |(w, _)| s < w) {
            worst = Some((s, r.t));
        }
        trend = trend.min(s + 4.0 * DIM * (-mu * (r.t - 1.0)).exp());
    }
    let Some((s, t)) = worst else {
        return CheckOutcome::vacuous(ID, ANCHOR, "no t >= 1 samples");
    };
    let mut notes = format!("min twisted scalar {s:.6} at t = {t:.4}");
    if mu > 0.0 {
        let verdict = if trend >= -slack { "holds" } else { "violated" };
        notes.push_str(&format!("; decay trend -4n e^(-mu(t-1)) {verdict} (worst excess {trend:.3e})"));
    }
    CheckOutcome::measured(ID, ANCHOR, s - floor, slack, Location::at(t), notes)
}

/// Report-to-report monotonicity of `A` (nondecreasing) or the Mabuchi
/// energy (nonincreasing).
pub fn check_monotonicity(run: &RunResult, which: Monotone, mu: f64, slack: f64) -> CheckOutcome {
    let (id, anchor) = match which {
        Monotone::A => ("a-monotone", "A-functional nondecreasing along the flow when mu > 0"),
        Monotone::Mabuchi => ("mabuchi-monotone", "Mabuchi energy nonincreasing along the flow"),
    };
    if which == Monotone::A && !(mu > 0.0) {
        return CheckOutcome::inconclusive(id, anchor, format!("needs mu > 0, got {mu}"));
    }
    let mut worst: Option<(f64, f64)> = None;
    for w in run.reports.windows(2) {
        let d = match which {
            Monotone::A => w[1].a - w[0].a,
            Monotone::Mabuchi => w[0].m - w[1].m,
        };
        if worst.map_or(true, |(v, _)| d < v) {
            worst = Some((d, w[1].t));
        }
    }
    match worst {
        None => CheckOutcome::vacuous(id, anchor, "fewer than two reports"),
        Some((d, t)) => CheckOutcome::measured(
            id,
            anchor,
            d,
            slack,
            Location::at(t),
            format!("worst step change {d:.3e} ending at t = {t:.4}"),
        ),
    }
}

/// `A ≤ 1e−12` throughout and `|A| ≤ 1e−4` once `‖∇u‖_∞ ≤ 1e−5`.
pub fn check_jensen(run: &RunResult) -> CheckOutcome {
    const ID: &str = "a-jensen";
    const ANCHOR: &str = "A-functional nonpositive, vanishing at the limit";
    let Some(last) = run.reports.last() else {
        return CheckOutcome::vacuous(ID, ANCHOR, "no reports");
    };
    let (mut top, mut at) = (f64::NEG_INFINITY, 0.0);
    for r in &run.reports {
        if r.a > top {
            (top, at) = (r.a, r.t);
        }
    }
    let mut margin = 1e-12 - top;
    let mut loc = Location::at(at);
    let mut notes = format!("max A {top:.3e} at t = {at:.4}");
    if last.grad_u_inf <= 1e-5 {
        let m = 1e-4 - last.a.abs();
        notes.push_str(&format!("; |A(T)| = {:.3e} at convergence", last.a.abs()));
        if m < margin {
            margin = m;
            loc = Location::at(last.t);
        }
    } else {
        notes.push_str(&format!("; not converged (grad u sup {:.3e})", last.grad_u_inf));
    }
    CheckOutcome::measured(ID, ANCHOR, margin, 0.0, loc, notes)
}

/// `|ΔM/Δt + ‖∇u‖²| ≤ max(1e−3, 0.05‖∇u‖²)` on every report interval, with
/// `‖∇u‖²` averaged over the interval.
pub fn check_energy_dissipation(run: &RunResult) -> CheckOutcome {
    const ID: &str = "energy-dissipation";
    const ANCHOR: &str = "dM/dt = -||grad u||^2 along the flow";
    let mut worst: Option<(f64, f64, f64)> = None;
    for w in run.reports.windows(2) {
        let h = w[1].t - w[0].t;
        let g = 0.5 * (w[0].grad_u_l2 + w[1].grad_u_l2);
        let err = ((w[1].m - w[0].m) / h + g).abs();
        let m = 1e-3f64.max(0.05 * g) - err;
        if worst.map_or(true, |(v, _, _)| m < v) {
            worst = Some((m, w[0].t, err));
        }
    }
    match worst {
        None => CheckOutcome::vacuous(ID, ANCHOR, "fewer than two reports"),
        Some((m, t, err)) => CheckOutcome::measured(
            ID,
            ANCHOR,
            m,
            0.0,
            Location::at(t),
            format!("worst |dM/dt + ||grad u||^2| = {err:.3e} on the interval from t = {t:.4}"),
        ),
    }
}

/// Largest relative mismatch between a finite difference of `q` and the
/// trapezoid average of `rhs`, net of a round-off floor.
fn worst_relative(reports: &[FunctionalReport], q: impl Fn(&FunctionalReport) -> f64, rhs: impl Fn(&FunctionalReport) -> f64) -> (f64, f64) {
    let mut worst = (0.0, reports[0].t);
    for w in reports.windows(2) {
        let h = w[1].t - w[0].t;
        let (q0, q1) = (q(&w[0]), q(&w[1]));
        let lhs = (q1 - q0) / h;
        let r = 0.5 * (rhs(&w[0]) + rhs(&w[1]));
        let floor = 1e-10 + 100.0 * f64::EPSILON * q0.abs().max(q1.abs()) / h;
        let excess = ((lhs - r).abs() - floor).max(0.0);
        let rel = if excess == 0.0 { 0.0 } else { excess / r.abs() };
        if rel > worst.0 {
            worst = (rel, w[0].t);
        }
    }
    worst
}

/// Finite-difference check of `dM/dt = −‖∇u‖²` and `dα/dt = μα − ‖∇u‖²`,
/// each within `max(1e−3, 3·dt)` relative.
///
/// `α` is compared in the form `d(α/g)/dt = −‖∇u‖²/g` with `g = e^ℓ` the
/// discrete growth factor, which is equivalent and avoids the exponential
/// growth of `α` when `μ > 0`. Differences smaller than a round-off floor of
/// `1e−10` plus a few ulps of the differenced quantity are not counted.
pub fn check_energy_identities(run: &RunResult, mu: f64, dt: f64) -> CheckOutcome {
    const ID: &str = "energy-identities";
    const ANCHOR: &str = "dM/dt = -||grad u||^2 and d(alpha)/dt = mu alpha - ||grad u||^2";
    let r = &run.reports;
    if r.len() < 2 {
        return CheckOutcome::inconclusive(ID, ANCHOR, "fewer than two reports");
    }
    let gap = r.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max);
    if gap > 10.5 * dt {
        return CheckOutcome::inconclusive(
            ID,
            ANCHOR,
            format!("report spacing {gap:.3e} exceeds 10 dt = {:.3e}", 10.0 * dt),
        );
    }
    let tol = 1e-3f64.max(3.0 * dt);
    let (em, tm) = worst_relative(r, |x| x.m, |x| -x.grad_u_l2);
    let (ea, ta) = worst_relative(r, |x| x.alpha_over_growth(mu), |x| -x.grad_u_l2 * (-x.log_growth).exp());
    let (e, t) = if em >= ea { (em, tm) } else { (ea, ta) };
    CheckOutcome::measured(
        ID,
        ANCHOR,
        tol - e,
        0.0,
        Location::at(t),
        format!("tolerance {tol:.1e}; worst relative error M {em:.3e} (t = {tm:.4}), alpha {ea:.3e} (t = {ta:.4})"),
    )
}

/// The shifted `α` stays above `−slack` at every report time it covers.
pub fn check_shifted_alpha(run: &RunResult, shift: &ShiftData, slack: f64) -> CheckOutcome {
    const ID: &str = "shifted-alpha";
    const ANCHOR: &str = "alpha of the shifted potential is nonnegative";
    let mut worst: Option<(f64, f64)> = None;
    for r in &run.reports {
        if let Some(a) = shift.alpha_at(r.t) {
            if worst.map_or(true, |(v, _)| a < v) {
                worst = Some((a, r.t));
            }
        }
    }
    match worst {
        None => CheckOutcome::vacuous(ID, ANCHOR, "no report inside the shifted run"),
        Some((a, t)) => CheckOutcome::measured(
            ID,
            ANCHOR,
            a,
            slack,
            Location::at(t),
            format!("min shifted alpha {a:.3e} at t = {t:.4}; C~ = {:.6e}", shift.c_tilde),
        ),
    }
}

/// Converged flow against the elliptic solution at the same parameters.
///
/// For `μ > 0` the flow limit is `φ_KE + α/μ`, so `φ̂ − α̂/μ` is compared in
/// sup norm; for `μ < 0` the potential itself; for `μ = 0` the oscillation
/// of the difference.
pub fn check_stationary_agreement(
    problem: &Problem,
    run: &RunResult,
    oracle: &StationarySolution,
    tol: f64,
) -> CheckOutcome {
    const ID: &str = "stationary-agreement";
    const ANCHOR: &str = "flow converges to the twisted Kahler-Einstein potential";
    if run.status != RunStatus::Converged {
        return CheckOutcome::inconclusive(ID, ANCHOR, format!("run status {:?}", run.status));
    }
    let st = &run.final_state;
    let mu = problem.mu();
    let diff = if mu > 0.0 {
        let alpha_hat = mean_weighted(&st.phi_dot.values, &st.ratio.values);
        st.phi.zip(&oracle.phi, |a, b| a - alpha_hat / mu - b)
    } else {
        st.potential().zip(&oracle.phi, |a, b| a - b)
    };
    let diff = match diff {
        Ok(d) => d,
        Err(e) => return CheckOutcome::inconclusive(ID, ANCHOR, e.to_string()),
    };
    let (dist, node, what) = if mu == 0.0 {
        let (node, _) = diff.argmin();
        (diff.osc(), node, "osc")
    } else {
        let (node, v) = diff
            .values
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (k, &v)| if v.abs() > acc.1 { (k, v.abs()) } else { acc });
        (v, node, "sup")
    };
    CheckOutcome::measured(
        ID,
        ANCHOR,
        tol - dist,
        0.0,
        Location::node(st.t, node),
        format!("{what} distance {dist:.3e} (tolerance {tol:.0e}) at t = {:.4}", st.t),
    )
}

/// Sup distance between the potentials of two states at matching times.
pub fn check_run_agreement(a: &FlowState, b: &FlowState, tol: f64) -> Result<CheckOutcome> {
    const ID: &str = "run-agreement";
    const ANCHOR: &str = "uniqueness: identical equations give identical flows";
    if (a.t - b.t).abs() > 1e-12 * a.t.abs().max(1.0) {
        return Err(crate::Error::Comparison(format!("final times differ: {} vs {}", a.t, b.t)));
    }
    let d = a.potential_difference(b)?;
    let (node, _) = d.map(f64::abs).argmin();
    let dist = d.sup_norm();
    Ok(CheckOutcome::measured(
        ID,
        ANCHOR,
        tol - dist,
        0.0,
        Location::node(a.t, node),
        format!("sup distance {dist:.3e} at t = {:.4}", a.t),
    ))
}

/// `M(φ(t)) ≥ M(φ_KE) − slack` at every report.
pub fn check_minimizer(run: &RunResult, m_ke: f64, slack: f64) -> CheckOutcome {
    const ID: &str = "mabuchi-minimizer";
    const ANCHOR: &str = "the Kahler-Einstein potential minimizes the Mabuchi energy";
    let Some((m, t)) = run
        .reports
        .iter()
        .map(|r| (r.m, r.t))
        .min_by(|a, b| a.0.total_cmp(&b.0))
    else {
        return CheckOutcome::vacuous(ID, ANCHOR, "no reports");
    };
    CheckOutcome::measured(
        ID,
        ANCHOR,
        m - m_ke,
        slack,
        Location::at(t),
        format!("min M {m:.10} at t = {t:.4}, oracle M {m_ke:.10}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// No-growth of `‖u‖_∞ + osc φ + sup tr` over the final half of the run
/// (max within 5% of the median) and, when `m_ke` is given, the Mabuchi
/// minimizer bound. The notes also record whether the short-time
/// equivalence `e^{−C/t} ≤ ω(t)/ω_ref ≤ e^{C/t}` holds on `(0, 1]` with `C`
/// fitted at `t = 1`; that part is informational.
pub fn check_uniform_bounds(run: &RunResult, m_ke: Option<f64>) -> CheckOutcome {
    const ID: &str = "uniform-bounds";
    const ANCHOR: &str = "uniform C0, oscillation and trace bounds along the flow";
    let r = &run.reports;
    if !r.iter().any(|x| x.t >= 1.0) {
        return CheckOutcome::inconclusive(ID, ANCHOR, "no t >= 1 samples");
    }
    let end = r.last().map_or(0.0, |x| x.t);
    let q = |x: &FunctionalReport| x.u_inf + x.osc_phi + x.sup_trace;
    let tail: Vec<&FunctionalReport> = r.iter().filter(|x| x.t >= 0.5 * end).collect();
    let med = median(tail.iter().map(|x| q(x)).collect());
    let (top, at) = tail
        .iter()
        .map(|x| (q(x), x.t))
        .fold((f64::NEG_INFINITY, end), |a, b| if b.0 > a.0 || b.0.is_nan() { b } else { a });
    let mut margin = 0.05 - (top / med - 1.0);
    let mut loc = Location::at(at);
    let mut notes = format!("no-growth: max {top:.6} vs median {med:.6} over t >= {:.3}", 0.5 * end);
    if run.status == RunStatus::Diverged {
        notes.push_str(&format!("; run diverged ({})", run.note.as_deref().unwrap_or("no note")));
    }
    if let Some(mk) = m_ke {
        let (m, t) = r
            .iter()
            .map(|x| (x.m, x.t))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((f64::NAN, 0.0));
        let mm = m - mk + 1e-6;
        notes.push_str(&format!("; min M - M_KE = {:.3e}", m - mk));
        if !(mm >= margin) {
            margin = mm;
            loc = Location::at(t);
        }
    }
    notes.push_str(&equivalence_note(r));
    CheckOutcome::measured(ID, ANCHOR, margin, 0.0, loc, notes)
}

fn log_spread(x: &FunctionalReport) -> f64 {
    x.sup_trace.ln().abs().max(x.inf_trace.ln().abs())
}

fn equivalence_note(r: &[FunctionalReport]) -> String {
    let Some(anchor) = r
        .iter()
        .filter(|x| x.t > 0.0)
        .min_by(|a, b| (a.t - 1.0).abs().total_cmp(&(b.t - 1.0).abs()))
    else {
        return "; equivalence: no t > 0 samples".into();
    };
    let c = log_spread(anchor) * anchor.t;
    let bad = r
        .iter()
        .filter(|x| x.t > 0.0 && x.t <= 1.0)
        .find(|x| log_spread(x) > c / x.t * (1.0 + 1e-9) + 1e-12);
    match bad {
        None => format!("; equivalence on (0,1] holds with C = {c:.4e} (informational)"),
        Some(x) => format!(
            "; equivalence on (0,1] with C = {c:.4e} fails at t = {:.4} (informational)",
            x.t
        ),
    }
}
