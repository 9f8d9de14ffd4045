//! Linear solvers for operators of the form `diag(c) + s·Δ₀`.
//!
//! Fourier modes in `θ` decouple `Δ₀` exactly, so a `θ`-independent
//! diagonal gives one tridiagonal system per mode. A `θ`-dependent diagonal
//! is handled by Krylov iteration preconditioned with its ring average.

use rustfft::num_complex::Complex;

use super::grid::SphereGrid;
use crate::error::{Error, Result};

/// Tridiagonal LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Tridiag {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl Tridiag {
    /// Factor the matrix with sub-diagonal `dl`, diagonal `d`, super-diagonal `du`.
    pub fn factor(mut dl: Vec<f64>, mut d: Vec<f64>, mut du: Vec<f64>) -> Result<Self> {
        let n = d.len();
        assert!(dl.len() + 1 == n.max(1) && du.len() + 1 == n.max(1));
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if let Some(k) = d.iter().position(|&v| v == 0.0) {
            return Err(Error::Singular {
                node: k,
                what: "zero pivot in tridiagonal factorization",
            });
        }
        Ok(Tridiag {
            dl,
            d,
            du,
            du2,
            swap,
        })
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

/// Exact inverse of `diag(c̄(ξ)) + s·Δ₀` with a ring-constant diagonal.
pub struct ModeSolver<'g> {
    grid: &'g SphereGrid,
    factors: Vec<Tridiag>,
}

impl<'g> ModeSolver<'g> {
    pub fn new(grid: &'g SphereGrid, cbar: &[f64], s: f64) -> Result<Self> {
        let n = grid.n_xi;
        let factors = (0..grid.n_theta)
            .map(|m| {
                let sigma = grid.symbol[m];
                let dl: Vec<f64> = (1..n).map(|i| s * grid.face[i]).collect();
                let du = dl.clone();
                let d: Vec<f64> = (0..n)
                    .map(|i| {
                        let mut off = 0.0;
                        if i + 1 < n {
                            off += grid.face[i + 1];
                        }
                        if i > 0 {
                            off += grid.face[i];
                        }
                        cbar[i] + s * (sigma * grid.ang[i] - off)
                    })
                    .collect();
                Tridiag::factor(dl, d, du)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModeSolver { grid, factors })
    }

    pub fn apply(&self, rhs: &[f64], out: &mut [f64]) {
        let g = self.grid;
        let (n, nt) = (g.n_xi, g.n_theta);
        if nt == 1 {
            out.copy_from_slice(rhs);
            self.factors[0].solve(out);
            return;
        }
        let (fwd, inv) = g.fft_plans().expect("fft planned for n_theta > 1");
        let mut spec = vec![Complex::new(0.0, 0.0); n * nt];
        for i in 0..n {
            let row = &mut spec[i * nt..(i + 1) * nt];
            for (c, &v) in row.iter_mut().zip(&rhs[i * nt..(i + 1) * nt]) {
                *c = Complex::new(v, 0.0);
            }
            fwd.process(row);
        }
        let mut re = vec![0.0; n];
        let mut im = vec![0.0; n];
        for (m, fac) in self.factors.iter().enumerate() {
            for i in 0..n {
                re[i] = spec[i * nt + m].re;
                im[i] = spec[i * nt + m].im;
            }
            fac.solve(&mut re);
            fac.solve(&mut im);
            for i in 0..n {
                spec[i * nt + m] = Complex::new(re[i], im[i]);
            }
        }
        let scale = 1.0 / nt as f64;
        for i in 0..n {
            let row = &mut spec[i * nt..(i + 1) * nt];
            inv.process(row);
            for (o, c) in out[i * nt..(i + 1) * nt].iter_mut().zip(row.iter()) {
                *o = c.re * scale;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const KRYLOV_TOL: f64 = 1e-13;
const KRYLOV_MAX_ITER: usize = 400;

fn ring_average(grid: &SphereGrid, c: &[f64]) -> (Vec<f64>, bool) {
    let nt = grid.n_theta;
    let mut uniform = true;
    let avg = (0..grid.n_xi)
        .map(|i| {
            let row = &c[i * nt..(i + 1) * nt];
            let m = row.iter().sum::<f64>() / nt as f64;
            if row.iter().any(|&v| (v - m).abs() > 1e-15 * m.abs().max(1.0)) {
                uniform = false;
            }
            m
        })
        .collect();
    (avg, uniform)
}

/// Solve `(diag(c) + s·Δ₀) x = rhs`.
///
/// With `s < 0` and `c > 0` the operator is symmetric positive definite and
/// preconditioned conjugate gradients are used; otherwise BiCGSTAB.
pub fn solve_shifted(grid: &SphereGrid, c: &[f64], s: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let (cbar, uniform) = ring_average(grid, c);
    let pre = ModeSolver::new(grid, &cbar, s)?;
    let mut x = vec![0.0; rhs.len()];
    pre.apply(rhs, &mut x);
    if uniform {
        return Ok(x);
    }
    let op = |v: &[f64], out: &mut [f64]| {
        grid.laplacian_into(v, out);
        for k in 0..v.len() {
            out[k] = c[k] * v[k] + s * out[k];
        }
    };
    if s < 0.0 && c.iter().all(|&v| v > 0.0) {
        pcg(&op, &pre, rhs, x)
    } else {
        bicgstab(&op, &pre, rhs, x)
    }
}

fn pcg(
    op: &dyn Fn(&[f64], &mut [f64]),
    pre: &ModeSolver<'_>,
    b: &[f64],
    mut x: Vec<f64>,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bn = norm(b).max(f64::MIN_POSITIVE);
    let mut ax = vec![0.0; n];
    op(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for _ in 0..KRYLOV_MAX_ITER {
        if norm(&r) <= KRYLOV_TOL * bn {
            return Ok(x);
        }
        op(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    let res = norm(&r) / bn;
    if res <= 1e-9 {
        return Ok(x);
    }
    Err(Error::LinearSolve {
        residual: res,
        iterations: KRYLOV_MAX_ITER,
    })
}

fn bicgstab(
    op: &dyn Fn(&[f64], &mut [f64]),
    pre: &ModeSolver<'_>,
    b: &[f64],
    mut x: Vec<f64>,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bn = norm(b).max(f64::MIN_POSITIVE);
    let mut tmp = vec![0.0; n];
    op(&x, &mut tmp);
    let mut r: Vec<f64> = b.iter().zip(&tmp).map(|(a, c)| a - c).collect();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..KRYLOV_MAX_ITER {
        if norm(&r) <= KRYLOV_TOL * bn {
            return Ok(x);
        }
        let rho_new = dot(&r0, &r);
        if rho_new == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
        }
        pre.apply(&p, &mut phat);
        op(&phat, &mut v);
        alpha = rho / dot(&r0, &v);
        let s: Vec<f64> = r.iter().zip(&v).map(|(a, c)| a - alpha * c).collect();
        if norm(&s) <= KRYLOV_TOL * bn {
            for k in 0..n {
                x[k] += alpha * phat[k];
            }
            return Ok(x);
        }
        pre.apply(&s, &mut shat);
        op(&shat, &mut t);
        omega = dot(&t, &s) / dot(&t, &t);
        for k in 0..n {
            x[k] += alpha * phat[k] + omega * shat[k];
            r[k] = s[k] - omega * t[k];
        }
    }
    let res = norm(&r) / bn;
    if res <= 1e-9 {
        return Ok(x);
    }
    Err(Error::LinearSolve {
        residual: res,
        iterations: KRYLOV_MAX_ITER,
    })
}

/// Solve `Δ₀ x = rhs − mean(rhs)` for the mean-zero `x`.
pub fn solve_laplacian_mean_zero(grid: &SphereGrid, rhs: &[f64]) -> Vec<f64> {
    let (n, nt) = (grid.n_xi, grid.n_theta);
    let mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
    let centered: Vec<f64> = rhs.iter().map(|v| v - mean).collect();

    // ring means: the m = 0 problem integrates exactly along the flux
    let ring: Vec<f64> = (0..n)
        .map(|i| centered[i * nt..(i + 1) * nt].iter().sum::<f64>() / nt as f64)
        .collect();
    let mut radial = vec![0.0; n];
    let mut flux = 0.0;
    for i in 0..n - 1 {
        flux += ring[i];
        radial[i + 1] = radial[i] + flux / grid.face[i + 1];
    }
    let rm = radial.iter().sum::<f64>() / n as f64;
    radial.iter_mut().for_each(|v| *v -= rm);
    if nt == 1 {
        return radial;
    }

    let (fwd, inv) = grid.fft_plans().expect("fft planned for n_theta > 1");
    let mut spec = vec![Complex::new(0.0, 0.0); n * nt];
    for i in 0..n {
        let row = &mut spec[i * nt..(i + 1) * nt];
        for (c, &v) in row.iter_mut().zip(&centered[i * nt..(i + 1) * nt]) {
            *c = Complex::new(v, 0.0);
        }
        fwd.process(row);
    }
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    for m in 1..nt {
        let sigma = grid.symbol[m];
        let dl: Vec<f64> = (1..n).map(|i| grid.face[i]).collect();
        let du = dl.clone();
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let mut off = 0.0;
                if i + 1 < n {
                    off += grid.face[i + 1];
                }
                if i > 0 {
                    off += grid.face[i];
                }
                sigma * grid.ang[i] - off
            })
            .collect();
        let fac = Tridiag::factor(dl, d, du).expect("nonzero modes are nonsingular");
        for i in 0..n {
            re[i] = spec[i * nt + m].re;
            im[i] = spec[i * nt + m].im;
        }
        fac.solve(&mut re);
        fac.solve(&mut im);
        for i in 0..n {
            spec[i * nt + m] = Complex::new(re[i], im[i]);
        }
    }
    for i in 0..n {
        spec[i * nt] = Complex::new(0.0, 0.0);
    }
    let scale = 1.0 / nt as f64;
    let mut out = vec![0.0; n * nt];
    for i in 0..n {
        let row = &mut spec[i * nt..(i + 1) * nt];
        inv.process(row);
        for (j, c) in row.iter().enumerate() {
            out[i * nt + j] = c.re * scale + radial[i];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply_shifted(grid: &SphereGrid, c: &[f64], s: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        grid.laplacian_into(x, &mut out);
        out.iter().zip(c).zip(x).map(|((l, c), x)| c * x + s * l).collect()
    }

    #[test]
    fn tridiag_matches_dense_with_pivoting() {
        // small pivot in the first row forces an interchange
        let dl = vec![3.0, 1.0, -2.0];
        let d = vec![1e-12, 4.0, -1.0, 5.0];
        let du = vec![2.0, 0.5, 1.0];
        let x_true = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            b[i] = d[i] * x_true[i];
            if i > 0 {
                b[i] += dl[i - 1] * x_true[i - 1];
            }
            if i < 3 {
                b[i] += du[i] * x_true[i + 1];
            }
        }
        let f = Tridiag::factor(dl, d, du).unwrap();
        f.solve(&mut b);
        for i in 0..4 {
            assert!((b[i] - x_true[i]).abs() < 1e-10, "{b:?}");
        }
    }

    #[test]
    fn shifted_solve_inverts_operator_1d_and_2d() {
        for grid in [SphereGrid::axisym(64).unwrap(), SphereGrid::full(32, 16).unwrap(), SphereGrid::full(24, 12).unwrap()] {
            let n = grid.nodes();
            let c: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * (k as f64 * 0.37).sin()).collect();
            let x_true: Vec<f64> = (0..n).map(|k| (k as f64 * 0.11).cos()).collect();
            for s in [-0.05, 0.3] {
                let b = apply_shifted(&grid, &c, s, &x_true);
                let x = solve_shifted(&grid, &c, s, &b).unwrap();
                let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(err < 1e-8, "grid {grid:?} s {s} err {err}");
            }
        }
    }

    #[test]
    fn laplacian_mean_zero_solve_roundtrip() {
        for grid in [SphereGrid::axisym(50).unwrap(), SphereGrid::full(20, 16).unwrap()] {
            let n = grid.nodes();
            let mut x: Vec<f64> = (0..n).map(|k| (k as f64 * 0.23).sin() + 0.1 * k as f64 / n as f64).collect();
            let m = x.iter().sum::<f64>() / n as f64;
            x.iter_mut().for_each(|v| *v -= m);
            let mut b = vec![0.0; n];
            grid.laplacian_into(&x, &mut b);
            let y = solve_laplacian_mean_zero(&grid, &b);
            let err = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "err {err}");
        }
    }
}
