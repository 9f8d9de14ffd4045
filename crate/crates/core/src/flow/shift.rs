use serde::{Deserialize, Serialize};

use super::run::{RunResult, RunStatus};
use crate::error::{Error, Result};

/// The constant `C̃` and the shifted `α` series of a converged `μ > 0` run.
///
/// `g(t) = e^ℓ` is the scheme's discrete version of `e^{μt}`; the shifted
/// potential is `ψ = φ + C̃·g(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftData {
    pub c_tilde: f64,
    /// Report time used as the lower limit of the time integral.
    pub anchor_t: f64,
    pub times: Vec<f64>,
    /// `∫_t^∞ e^{−μ(s−t)}‖∇u‖² ds` per report.
    pub shifted_alpha: Vec<f64>,
}

impl ShiftData {
    /// Shifted `α` at time `t`, linearly interpolated between reports.
    pub fn alpha_at(&self, t: f64) -> Option<f64> {
        let n = self.times.len();
        if n == 0 || t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let k = self.times.partition_point(|&s| s < t);
        if k < n && self.times[k] == t {
            return Some(self.shifted_alpha[k]);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Some((1.0 - w) * self.shifted_alpha[k - 1] + w * self.shifted_alpha[k])
    }
}

/// `C̃ = (1/(μ g(t₁)))(∫_{t₁}^∞ e^{−μ(t−t₁)}‖∇u‖²dt − α(t₁))` with `t₁` the
/// report closest to `t = 1`; the integral is trapezoidal up to the final
/// time plus the bound `‖∇u(T)‖²/μ` for the rest.
pub fn shift_constant(mu: f64, run: &RunResult) -> Result<ShiftData> {
    if !(mu > 0.0) {
        return Err(Error::Undefined(format!(
            "the shift constant needs μ > 0, got {mu}"
        )));
    }
    if run.status != RunStatus::Converged {
        return Err(Error::Undefined(
            "the shift constant needs a converged run".into(),
        ));
    }
    let r = &run.reports;
    if r.is_empty() {
        return Err(Error::Undefined("run has no reports".into()));
    }
    let n = r.len();
    let mut tail = vec![0.0; n];
    tail[n - 1] = r[n - 1].grad_u_l2 / mu;
    for k in (0..n - 1).rev() {
        let h = r[k + 1].t - r[k].t;
        let e = (-mu * h).exp();
        tail[k] = e * tail[k + 1] + 0.5 * h * (r[k].grad_u_l2 + e * r[k + 1].grad_u_l2);
    }
    let anchor = (0..n)
        .min_by(|&a, &b| {
            (r[a].t - 1.0)
                .abs()
                .partial_cmp(&(r[b].t - 1.0).abs())
                .unwrap()
        })
        .unwrap();
    let a = &r[anchor];
    // α/g = α̂ e^{−ℓ} + μK stays moderate even when g is huge
    let alpha_over_g = a.alpha_hat * (-a.log_growth).exp() + mu * a.offset;
    let c_tilde = (tail[anchor] * (-a.log_growth).exp() - alpha_over_g) / mu;
    Ok(ShiftData {
        c_tilde,
        anchor_t: a.t,
        times: r.iter().map(|x| x.t).collect(),
        shifted_alpha: tail,
    })
}
