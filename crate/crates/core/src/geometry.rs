//! Background geometry of ℂP¹, divisor data and the regularization objects.
//!
//! `ω₀ = ρ₀ i dz∧dz̄` with `ρ₀ = 2/(1+|z|²)²`, so `Ric(ω₀) = ω₀`, the Ricci
//! potential `F₀` vanishes and the total volume is `4π`. Densities are
//! always taken with respect to `i dz∧dz̄`, and in complex dimension one a
//! `(1,1)`-form `i∂∂̄f` has density `ρ₀·Δ₀f`.

use serde::{Deserialize, Serialize};

use crate::discretization::{Field, SphereGrid, VOLUME};
use crate::error::{Error, Result};

/// Sup of `|s|²_h` targeted by the automatic choice of `c`.
pub const DEFAULT_SUP_MODULUS: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySetup {
    pub volume: f64,
    pub k: f64,
}

impl GeometrySetup {
    pub fn new(k: f64) -> Self {
        GeometrySetup { volume: VOLUME, k }
    }

    pub fn f0(&self, grid: &SphereGrid) -> Field {
        grid.zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DivisorPoint {
    Finite { re: f64, im: f64 },
    Infinity,
}

impl DivisorPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        DivisorPoint::Finite { re, im }
    }

    fn coincides(&self, other: &DivisorPoint) -> bool {
        match (self, other) {
            (DivisorPoint::Infinity, DivisorPoint::Infinity) => true,
            (DivisorPoint::Finite { re: a, im: b }, DivisorPoint::Finite { re: c, im: d }) => {
                (a - c).hypot(b - d) < 1e-12
            }
            _ => false,
        }
    }

    fn is_origin(&self) -> bool {
        matches!(self, DivisorPoint::Finite { re, im } if *re == 0.0 && *im == 0.0)
    }
}

/// Smooth divisor of `d` distinct points, `λ = d/2`, with the Hermitian
/// metric `|s|²_h = c·∏|z−p|²/(1+|z|²)^{2λ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisorData {
    pub points: Vec<DivisorPoint>,
    pub scale: f64,
}

impl DivisorData {
    /// `scale = None` picks `c` so that `sup |s|²_h = 1/4`.
    pub fn new(points: Vec<DivisorPoint>, scale: Option<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("divisor needs at least one point".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if let DivisorPoint::Finite { re, im } = p {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::Config(format!("divisor point {i} is not finite")));
                }
            }
            if points[..i].iter().any(|q| q.coincides(p)) {
                return Err(Error::Config(format!(
                    "divisor point {i} repeats an earlier point; points must be distinct"
                )));
            }
        }
        let mut d = DivisorData {
            points,
            scale: 1.0,
        };
        d.scale = match scale {
            Some(c) if c > 0.0 && c.is_finite() => c,
            Some(c) => {
                return Err(Error::Parameter {
                    name: "c",
                    value: c,
                    constraint: "must be positive",
                })
            }
            None => DEFAULT_SUP_MODULUS / d.sup_unscaled(),
        };
        let sup = d.scale * d.sup_unscaled();
        if sup >= 0.5 {
            return Err(Error::Parameter {
                name: "c",
                value: d.scale,
                constraint: "sup |s|² must stay below 1/2",
            });
        }
        Ok(d)
    }

    /// The two poles, `λ = 1`, `c = 1`: `|s|² = ξ(1−ξ)`.
    pub fn poles() -> Self {
        DivisorData {
            points: vec![DivisorPoint::finite(0.0, 0.0), DivisorPoint::Infinity],
            scale: 1.0,
        }
    }

    pub fn degree(&self) -> usize {
        self.points.len()
    }

    pub fn lambda(&self) -> f64 {
        self.points.len() as f64 / 2.0
    }

    /// True when every point is a pole, so `|s|²` depends on `ξ` only.
    pub fn is_axisymmetric(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.is_origin() || matches!(p, DivisorPoint::Infinity))
    }

    fn unscaled_at(&self, re: f64, im: f64) -> f64 {
        let r2 = re * re + im * im;
        let mut num = 1.0;
        for p in &self.points {
            if let DivisorPoint::Finite { re: a, im: b } = p {
                num *= (re - a).powi(2) + (im - b).powi(2);
            }
        }
        num / (1.0 + r2).powi(self.degree() as i32)
    }

    fn unscaled_at_sphere(&self, xi: f64, theta: f64) -> f64 {
        if xi >= 1.0 {
            // at infinity only a point at infinity can vanish; the value is the
            // limit of the leading coefficient ratio
            let finite = self.points.iter().filter(|p| !matches!(p, DivisorPoint::Infinity)).count();
            return if finite == self.degree() { 1.0 } else { 0.0 };
        }
        let r = (xi / (1.0 - xi)).sqrt();
        self.unscaled_at(r * theta.cos(), r * theta.sin())
    }

    fn sup_unscaled(&self) -> f64 {
        if self.is_axisymmetric() {
            let a = self.points.iter().filter(|p| p.is_origin()).count() as f64;
            let b = self.degree() as f64 - a;
            // max of ξ^a (1−ξ)^b
            return match (a > 0.0, b > 0.0) {
                (true, true) => a.powf(a) * b.powf(b) / (a + b).powf(a + b),
                _ => 1.0,
            };
        }
        let (nx, nt) = (400usize, 800usize);
        let mut best = (0.0, 0.0, 0.0);
        for i in 0..=nx {
            let xi = i as f64 / nx as f64;
            for j in 0..nt {
                let th = 2.0 * std::f64::consts::PI * j as f64 / nt as f64;
                let v = self.unscaled_at_sphere(xi, th);
                if v > best.0 {
                    best = (v, xi, th);
                }
            }
        }
        let (mut v, mut x, mut t) = best;
        let mut step = (1.0 / nx as f64, 2.0 * std::f64::consts::PI / nt as f64);
        while step.0 > 1e-13 {
            let mut improved = false;
            for (dx, dt) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
                let xn = (x + dx * step.0).clamp(0.0, 1.0);
                let tn = t + dt * step.1;
                let vn = self.unscaled_at_sphere(xn, tn);
                if vn > v {
                    (v, x, t) = (vn, xn, tn);
                    improved = true;
                }
            }
            if !improved {
                step = (step.0 * 0.5, step.1 * 0.5);
            }
        }
        v
    }

    /// `|s|²_h` at a chart point.
    pub fn modulus_sq_at(&self, re: f64, im: f64) -> f64 {
        self.scale * self.unscaled_at(re, im)
    }

    /// `|s|²_h` on the grid; in closed form in `ξ` for polar divisors.
    pub fn modulus_sq(&self, grid: &SphereGrid) -> Field {
        if self.is_axisymmetric() {
            let a = self.points.iter().filter(|p| p.is_origin()).count() as i32;
            let b = self.degree() as i32 - a;
            grid.from_xi(|x| self.scale * x.powi(a) * (1.0 - x).powi(b))
        } else {
            grid.from_fn(|k| {
                let (re, im) = grid.z_at(k);
                self.modulus_sq_at(re, im)
            })
        }
    }
}

pub fn background_density(grid: &SphereGrid) -> Field {
    grid.rho0()
}

/// `log(ε² + |s|²_h)` per node.
pub fn divisor_log_weight(grid: &SphereGrid, divisor: &DivisorData, epsilon: f64) -> Result<Field> {
    if !(epsilon >= 0.0) {
        return Err(Error::Parameter {
            name: "epsilon",
            value: epsilon,
            constraint: "must be nonnegative",
        });
    }
    let s = divisor.modulus_sq(grid);
    let e2 = epsilon * epsilon;
    if let Some(k) = s.values.iter().position(|&v| v + e2 <= 0.0) {
        return Err(Error::Singular {
            node: k,
            what: "log weight evaluated on a divisor point with ε = 0",
        });
    }
    Ok(s.map(|v| (e2 + v).ln()))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter {
            name: "gamma",
            value: gamma,
            constraint: "must lie in (0, 1]",
        });
    }
    Ok(())
}

fn chi_integrand(r: f64, gamma: f64, e2: f64) -> f64 {
    if r < 1e-12 {
        gamma * e2.powf(gamma - 1.0)
    } else {
        // ((ε²+r)^γ − ε^{2γ})/r without cancellation
        e2.powf(gamma) * (gamma * (r / e2).ln_1p()).exp_m1() / r
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

/// `χ_γ(y; ε) = (1/γ)∫₀^y ((ε²+r)^γ − ε^{2γ})/r dr`.
pub fn chi_gamma(y: f64, gamma: f64, epsilon: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(y >= 0.0) {
        return Err(Error::Parameter {
            name: "y",
            value: y,
            constraint: "must be nonnegative",
        });
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let e2 = epsilon * epsilon;
    if gamma == 1.0 {
        return Ok(y);
    }
    if e2 == 0.0 {
        return Ok(y.powf(gamma) / (gamma * gamma));
    }
    let f = |r: f64| chi_integrand(r, gamma, e2);
    // split at ε², where the integrand turns from flat to power-law decay
    let knots = [0.0, e2.min(y), y];
    let mut total = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            let scale = f(w[0]).abs() * (w[1] - w[0]);
            total += adaptive_simpson(&f, w[0], w[1], 1e-14 * scale.max(1e-300));
        }
    }
    Ok(total / gamma)
}

/// `dχ_γ/dy = ((ε²+y)^γ − ε^{2γ})/(γy)`.
pub fn chi_gamma_derivative(y: f64, gamma: f64, epsilon: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let e2 = epsilon * epsilon;
    if e2 == 0.0 {
        return Ok(y.powf(gamma - 1.0) / gamma);
    }
    Ok(chi_integrand(y, gamma, e2) / gamma)
}

/// Density of `θ_ε = λω₀ + i∂∂̄ log(ε²+|s|²)`, using the discrete Laplacian.
pub fn theta_eps_density(grid: &SphereGrid, divisor: &DivisorData, epsilon: f64) -> Result<Field> {
    if !(epsilon > 0.0) {
        return Err(Error::Parameter {
            name: "epsilon",
            value: epsilon,
            constraint: "θ_ε is singular at ε = 0",
        });
    }
    let w = divisor_log_weight(grid, divisor, epsilon)?;
    let lap = grid.laplacian(&w)?;
    let lambda = divisor.lambda();
    lap.zip(&grid.rho0(), |l, r| r * (lambda + l))
}

fn chi_field(grid: &SphereGrid, divisor: &DivisorData, gamma: f64, epsilon: f64) -> Result<Field> {
    check_gamma(gamma)?;
    let s = divisor.modulus_sq(grid);
    let e2 = epsilon * epsilon;
    if gamma == 1.0 || e2 == 0.0 {
        let vals = s
            .values
            .iter()
            .map(|&y| chi_gamma(y, gamma, epsilon))
            .collect::<Result<Vec<_>>>()?;
        return Field::new(grid.n_xi, grid.n_theta, vals);
    }
    // accumulate the integral over the sorted arguments
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s.values[a].total_cmp(&s.values[b]));
    let f = |r: f64| chi_integrand(r, gamma, e2);
    let mut vals = vec![0.0; s.len()];
    let (mut at, mut acc) = (0.0, 0.0);
    for &k in &order {
        let y = s.values[k];
        for (a, b) in [(at, e2.clamp(at, y)), (e2.clamp(at, y), y)] {
            if b > a {
                let scale = f(a).abs() * (b - a);
                acc += adaptive_simpson(&f, a, b, 1e-15 * scale.max(1e-300));
            }
        }
        at = y;
        vals[k] = acc / gamma;
    }
    Field::new(grid.n_xi, grid.n_theta, vals)
}

fn reference_from_chi(grid: &SphereGrid, chi: &Field, k: f64) -> Result<Field> {
    let lap = grid.laplacian(chi)?;
    lap.zip(&grid.rho0(), |l, r| r * (1.0 + k * l))
}

fn positivity_floor(grid: &SphereGrid) -> f64 {
    0.1 * grid.rho0().min()
}

/// Density of `ω_ε^γ = ω₀ + k i∂∂̄ χ_γ(|s|²)`.
pub fn regularized_reference_density(
    grid: &SphereGrid,
    divisor: &DivisorData,
    gamma: f64,
    epsilon: f64,
    k: f64,
) -> Result<Field> {
    let chi = chi_field(grid, divisor, gamma, epsilon)?;
    let d = reference_from_chi(grid, &chi, k)?;
    let floor = positivity_floor(grid);
    let min = d.min();
    if min < floor {
        return Err(Error::KTooLarge { k, min, floor });
    }
    Ok(d)
}

/// Largest `k = 2^{-j}` keeping the reference density above `0.1·min ρ₀`.
pub fn select_k(grid: &SphereGrid, divisor: &DivisorData, gamma: f64, epsilon: f64) -> Result<f64> {
    let chi = chi_field(grid, divisor, gamma, epsilon)?;
    let floor = positivity_floor(grid);
    let mut k = 1.0;
    for _ in 0..60 {
        if reference_from_chi(grid, &chi, k)?.min() >= floor {
            return Ok(k);
        }
        k *= 0.5;
    }
    Err(Error::KTooLarge {
        k,
        min: reference_from_chi(grid, &chi, k)?.min(),
        floor,
    })
}

/// Density of Donaldson's cone metric `ω₀ + (k/γ²) i∂∂̄|s|^{2γ}`.
pub fn donaldson_cone_density(
    grid: &SphereGrid,
    divisor: &DivisorData,
    gamma: f64,
    k: f64,
) -> Result<Field> {
    check_gamma(gamma)?;
    let s = divisor.modulus_sq(grid);
    if let Some(node) = s.values.iter().position(|&v| v <= 0.0) {
        return Err(Error::Singular {
            node,
            what: "cone metric evaluated on a divisor point",
        });
    }
    let pot = s.map(|v| v.powf(gamma));
    let lap = grid.laplacian(&pot)?;
    lap.zip(&grid.rho0(), |l, r| r * (1.0 + k / (gamma * gamma) * l))
}

pub fn mu_of(lambda: f64, gamma: f64) -> f64 {
    1.0 - (1.0 - gamma) * lambda
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaTwist {
    pub beta: f64,
    pub mu_beta: f64,
    /// Smoothed conical potential `φ_ε`, nonpositive.
    pub phi_eps: Field,
    /// `sup φ_1` of the `ε = 1` member, used to normalize initial data.
    pub phi_one_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Twist {
    Plain,
    Beta(BetaTwist),
}

/// Scalar parameters of one flow instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    pub lambda: f64,
    pub gamma: f64,
    pub mu_gamma: f64,
    pub epsilon: f64,
    pub k: f64,
    pub twist: Twist,
}

impl FlowParams {
    pub fn plain(lambda: f64, gamma: f64, epsilon: f64, k: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter {
                name: "epsilon",
                value: epsilon,
                constraint: "must be nonnegative",
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::Parameter {
                name: "lambda",
                value: lambda,
                constraint: "must be positive",
            });
        }
        Ok(FlowParams {
            lambda,
            gamma,
            mu_gamma: mu_of(lambda, gamma),
            epsilon,
            k,
            twist: Twist::Plain,
        })
    }

    pub fn beta_twisted(
        lambda: f64,
        gamma: f64,
        beta: f64,
        epsilon: f64,
        k: f64,
        phi_eps: Field,
        phi_one_sup: f64,
    ) -> Result<Self> {
        let mut p = Self::plain(lambda, gamma, epsilon, k)?;
        check_gamma(beta).map_err(|_| Error::Parameter {
            name: "beta",
            value: beta,
            constraint: "must lie in (0, 1]",
        })?;
        let mu_beta = mu_of(lambda, beta);
        if !(p.mu_gamma >= 0.0 && p.mu_gamma <= mu_beta) {
            return Err(Error::Parameter {
                name: "gamma",
                value: gamma,
                constraint: "beta-twisted mode needs 0 ≤ μ_γ ≤ μ_β",
            });
        }
        if phi_eps.max() > 1e-12 {
            return Err(Error::Parameter {
                name: "phi_eps",
                value: phi_eps.max(),
                constraint: "smoothed potential must be nonpositive",
            });
        }
        p.twist = Twist::Beta(BetaTwist {
            beta,
            mu_beta,
            phi_eps,
            phi_one_sup,
        });
        Ok(p)
    }

    /// Exponent `1−γ` (plain) or `1−β` (beta-twisted) of the divisor weight.
    pub fn weight_exponent(&self) -> f64 {
        match &self.twist {
            Twist::Plain => 1.0 - self.gamma,
            Twist::Beta(b) => 1.0 - b.beta,
        }
    }

    /// The zero-order forcing `G` in `φ̇ = log(1+Δ₀φ) + μ_γφ + G`.
    pub fn forcing(&self, log_weight: &Field) -> Result<Field> {
        let a = self.weight_exponent();
        match &self.twist {
            Twist::Plain => Ok(log_weight.map(|w| a * w)),
            Twist::Beta(b) => {
                let c = b.mu_beta - self.mu_gamma;
                log_weight.zip(&b.phi_eps, |w, p| c * p + a * w)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Independent composite Gauss–Legendre on a geometric partition.
    fn chi_oracle(y: f64, gamma: f64, eps: f64) -> f64 {
        let (x, w) = gauss_legendre_16();
        let e2 = eps * eps;
        let f = |r: f64| ((e2 + r).powf(gamma) - e2.powf(gamma)) / r;
        let mut edges = vec![0.0];
        let mut a = y;
        for _ in 0..60 {
            edges.push(a);
            a *= 0.5;
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s = 0.0;
        for win in edges.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            for (xi, wi) in x.iter().zip(&w) {
                let r = 0.5 * (hi - lo) * xi + 0.5 * (hi + lo);
                s += 0.5 * (hi - lo) * wi * f(r);
            }
        }
        s / gamma
    }

    fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
        // Newton iteration on P_16
        let n = 16;
        let mut xs = vec![];
        let mut ws = vec![];
        for i in 1..=n {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            xs.push(x);
            ws.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        (xs, ws)
    }

    #[test]
    fn background_density_values() {
        let g = SphereGrid::axisym(64).unwrap();
        let rho = background_density(&g);
        assert!(rho.min() > 0.0);
        // z = 0 is ξ = 0 and |z| = 1 is ξ = 1/2
        assert_eq!(2.0 * (1.0 - 0.0f64).powi(2), 2.0);
        let at_half = 2.0 * (1.0 - 0.5f64).powi(2);
        assert_eq!(at_half, 0.5);
        assert!((g.integrate(&g.constant(1.0), Some(&rho)).unwrap() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn chart_quadrature_of_background_is_volume() {
        // ∫ 2/(1+r²)² · 2 dxdy in polar coordinates, with r = u/(1−u) mapping [0,1) onto [0,∞)
        let n = 100_000;
        let du = 1.0 / n as f64;
        let mut v = 0.0;
        for i in 0..n {
            let u = (i as f64 + 0.5) * du;
            let r = u / (1.0 - u);
            let jac = 1.0 / (1.0 - u).powi(2);
            v += 4.0 / (1.0 + r * r).powi(2) * 2.0 * PI * r * jac * du;
        }
        assert!((v - 4.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn ricci_identity_of_background() {
        // −∂∂̄ log ρ₀ = ρ₀ ⟺ −Δ₀ log ρ₀ = 1 in density form
        let mut errs = vec![];
        for n in [64, 128, 256] {
            let g = SphereGrid::axisym(n).unwrap();
            let lr = g.rho0().map(f64::ln);
            let l = g.laplacian(&lr).unwrap();
            let mid = (n / 8..7 * n / 8).map(|i| (l.values[i] + 1.0).abs()).fold(0.0, f64::max);
            errs.push(mid);
        }
        assert!(errs[2] < 1e-10 || errs[2] < errs[0] / 8.0, "{errs:?}");
    }

    #[test]
    fn polar_divisor_modulus() {
        let g = SphereGrid::axisym(64).unwrap();
        let d = DivisorData::new(vec![DivisorPoint::finite(0.0, 0.0), DivisorPoint::Infinity], None).unwrap();
        assert!((d.scale - 1.0).abs() < 1e-15);
        assert_eq!(d.lambda(), 1.0);
        let s = d.modulus_sq(&g);
        for (k, &v) in s.values.iter().enumerate() {
            let x = g.xi_at(k);
            assert!((v - x * (1.0 - x)).abs() < 1e-15);
            let (re, im) = g.z_at(k);
            assert!((v - d.modulus_sq_at(re, im)).abs() < 1e-14);
        }
        // sup at |z| = 1 is 1/4
        assert!((d.modulus_sq_at(1.0, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn log_weight_examples() {
        let d = DivisorData::poles();
        let g = SphereGrid::axisym(64).unwrap();
        // at the divisor |s|² = 0
        assert!(((0.01f64 + 0.0).ln() - (0.1f64 * 0.1).ln()).abs() < 1e-15);
        assert!((d.modulus_sq_at(0.0, 0.0)).abs() == 0.0);
        assert!(((d.modulus_sq_at(1.0, 0.0)).ln() - 0.25f64.ln()).abs() < 1e-15);
        let w = divisor_log_weight(&g, &d, 0.5).unwrap();
        assert!(w.min() >= 0.25f64.ln());
        let w0 = divisor_log_weight(&g, &d, 0.0).unwrap();
        assert!(w0.is_finite());
    }

    #[test]
    fn log_weight_refuses_divisor_node_at_zero_eps() {
        // ξ = 1/2, θ = 0 is the node z = 1 when n_xi is odd
        let g = SphereGrid::full(17, 8).unwrap();
        let d = DivisorData::new(
            vec![DivisorPoint::finite(1.0, 0.0), DivisorPoint::finite(-1.0, 0.0)],
            None,
        )
        .unwrap();
        assert!(matches!(
            divisor_log_weight(&g, &d, 0.0),
            Err(Error::Singular { .. })
        ));
        assert!(divisor_log_weight(&g, &d, 0.1).unwrap().is_finite());
    }

    #[test]
    fn curvature_of_h_is_lambda_omega0() {
        let mut errs = vec![];
        for (nx, nt) in [(64, 32), (128, 64), (256, 128)] {
        let g = SphereGrid::full(nx, nt).unwrap();
        let d = DivisorData::new(
            vec![
                DivisorPoint::finite(0.0, 0.0),
                DivisorPoint::Infinity,
                DivisorPoint::finite(1.0, 0.0),
                DivisorPoint::finite(-1.0, 0.0),
            ],
            None,
        )
        .unwrap();
        assert!(d.modulus_sq(&g).max() < 0.5);
        let ls = d.modulus_sq(&g).map(f64::ln);
        let l = g.laplacian(&ls).unwrap();
        // off the divisor −Δ₀ log|s|² = λ; check on a band away from the points
        let mut worst: f64 = 0.0;
        for k in 0..g.nodes() {
            let x = g.xi_at(k);
            let t = g.theta_at(k);
            if (x - 0.3).abs() < 0.05 && (t - PI / 2.0).abs() < 0.3 {
                worst = worst.max((-l.values[k] - 2.0).abs());
            }
        }
        errs.push(worst);
        }
        eprintln!("{errs:?}");
        assert!(errs[2] < 0.35 * errs[1] && errs[1] < 0.35 * errs[0], "{errs:?}");
    }

    #[test]
    fn default_scale_hits_quarter() {
        let d = DivisorData::new(
            vec![
                DivisorPoint::finite(0.3, 0.2),
                DivisorPoint::finite(-1.0, 0.5),
                DivisorPoint::Infinity,
            ],
            None,
        )
        .unwrap();
        let g = SphereGrid::full(256, 256).unwrap();
        let m = d.modulus_sq(&g).max();
        assert!(m <= 0.25 + 1e-9 && m > 0.24, "{m}");
        assert!(matches!(
            DivisorData::new(vec![DivisorPoint::Infinity, DivisorPoint::Infinity], None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn chi_gamma_examples() {
        assert_eq!(chi_gamma(0.0, 0.4, 0.1).unwrap(), 0.0);
        assert!((chi_gamma(0.25, 0.5, 0.0).unwrap() - 2.0).abs() < 1e-14);
        // quadrature oracle agrees with the closed form at ε = 0
        let (_, gw) = gauss_legendre_16();
        assert!((gw.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!((chi_oracle(0.25, 0.5, 1e-9) - 2.0).abs() < 1e-3, "{}", chi_oracle(0.25, 0.5, 1e-9));
        for &(y, gm, e) in &[(0.25, 0.5, 0.1), (0.1, 0.3, 0.02), (0.4, 0.9, 0.5), (1e-3, 0.6, 0.05)] {
            let a = chi_gamma(y, gm, e).unwrap();
            let b = chi_oracle(y, gm, e);
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{y} {gm} {e}: {a} {b}");
        }
        assert!(matches!(chi_gamma(0.1, 1.5, 0.1), Err(Error::Parameter { .. })));
        assert!(matches!(chi_gamma(0.1, 0.0, 0.1), Err(Error::Parameter { .. })));
    }

    #[test]
    fn chi_field_accumulation_matches_pointwise() {
        let g = SphereGrid::full(16, 8).unwrap();
        let d = DivisorData::new(
            vec![DivisorPoint::finite(0.0, 0.0), DivisorPoint::finite(1.0, 0.5)],
            None,
        )
        .unwrap();
        let f = chi_field(&g, &d, 0.4, 0.05).unwrap();
        let s = d.modulus_sq(&g);
        for (y, c) in s.values.iter().zip(&f.values) {
            let p = chi_gamma(*y, 0.4, 0.05).unwrap();
            assert!((c - p).abs() < 1e-11 * p.abs().max(1.0), "{c} {p}");
        }
    }

    #[test]
    fn chi_gamma_derivative_matches_finite_differences() {
        for &(y, gm, e) in &[(0.2, 0.5, 0.1), (0.05, 0.3, 0.02), (0.3, 0.8, 0.3)] {
            let h = 1e-6 * y;
            let fd = (chi_gamma(y + h, gm, e).unwrap() - chi_gamma(y - h, gm, e).unwrap()) / (2.0 * h);
            let d = chi_gamma_derivative(y, gm, e).unwrap();
            assert!((fd - d).abs() < 1e-6 * d.abs(), "{fd} {d}");
            let closed = ((e * e + y).powf(gm) - (e * e).powf(gm)) / (gm * y);
            assert!((d - closed).abs() < 1e-12 * closed);
        }
    }

    #[test]
    fn theta_eps_class_and_positivity() {
        let d = DivisorData::poles();
        let coarse = SphereGrid::axisym(256).unwrap();
        let fine = SphereGrid::axisym(1024).unwrap();
        for eps in [0.5, 0.1] {
            let a = theta_eps_density(&coarse, &d, eps).unwrap();
            let b = theta_eps_density(&fine, &d, eps).unwrap();
            let va = coarse.integrate(&coarse.constant(1.0), Some(&a)).unwrap();
            let vb = fine.integrate(&fine.constant(1.0), Some(&b)).unwrap();
            assert!((va - 4.0 * PI).abs() < 1e-10 && (vb - 4.0 * PI).abs() < 1e-10);
            assert!(a.min() > -1e-9 && b.min() > -1e-9);
        }
        assert!(theta_eps_density(&coarse, &d, 0.0).is_err());
    }

    #[test]
    fn theta_eps_vanishes_off_divisor_as_eps_shrinks() {
        let d = DivisorData::poles();
        let g = SphereGrid::axisym(512).unwrap();
        let mid = g.n_xi / 2;
        let a = theta_eps_density(&g, &d, 0.1).unwrap().values[mid];
        let b = theta_eps_density(&g, &d, 0.01).unwrap().values[mid];
        assert!(b < 0.05 * a && b >= 0.0, "{a} {b}");
    }

    #[test]
    fn reference_density_examples() {
        let d = DivisorData::poles();
        let g = SphereGrid::axisym(256).unwrap();
        let r0 = regularized_reference_density(&g, &d, 0.5, 0.1, 0.0).unwrap();
        assert_eq!(r0, g.rho0());
        let k = select_k(&g, &d, 0.5, 0.1).unwrap();
        let r = regularized_reference_density(&g, &d, 0.5, 0.1, k).unwrap();
        assert!(r.min() > 0.0);
        assert!((g.integrate(&g.constant(1.0), Some(&r)).unwrap() - 4.0 * PI).abs() < 1e-10);
        // the halving search stops at the first admissible k
        assert!(regularized_reference_density(&g, &d, 0.5, 0.1, 2.0 * k).is_err() || k == 1.0);
    }

    #[test]
    fn donaldson_limit_matches_reference_at_gamma_one() {
        let d = DivisorData::poles();
        let g = SphereGrid::axisym(128).unwrap();
        let a = donaldson_cone_density(&g, &d, 1.0, 0.3).unwrap();
        let b = regularized_reference_density(&g, &d, 1.0, 0.0, 0.3).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(donaldson_cone_density(&g, &d, 0.5, 0.0).unwrap(), g.rho0());
        let k = select_k(&g, &d, 0.5, 0.0).unwrap();
        assert!(donaldson_cone_density(&g, &d, 0.5, k).unwrap().min() > 0.0);
    }

    #[test]
    fn flow_params_relations() {
        let p = FlowParams::plain(1.0, 0.5, 0.1, 0.1).unwrap();
        assert_eq!(p.mu_gamma, 0.5);
        let p = FlowParams::plain(2.0, 0.3, 0.1, 0.1).unwrap();
        assert!((p.mu_gamma + 0.4).abs() < 1e-15);
        let g = SphereGrid::axisym(32).unwrap();
        assert!(FlowParams::beta_twisted(1.0, 0.3, 0.5, 0.1, 0.1, g.constant(-1.0), -1.0).is_ok());
        assert!(FlowParams::beta_twisted(1.0, 0.7, 0.5, 0.1, 0.1, g.constant(-1.0), -1.0).is_err());
        assert!(FlowParams::beta_twisted(1.0, 0.3, 0.5, 0.1, 0.1, g.constant(0.5), -1.0).is_err());
    }
}
