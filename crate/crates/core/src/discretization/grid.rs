use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::field::Field;
use crate::error::{Error, Result};

pub const MIN_N_XI: usize = 16;
pub const MIN_N_THETA: usize = 8;

/// Total background volume `∫ω₀` of the sphere.
pub const VOLUME: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridMode {
    #[serde(rename = "axisym1d")]
    Axisym1D,
    #[serde(rename = "full2d")]
    Full2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngularScheme {
    Spectral,
    Centered,
}

/// Cell-centered grid in `(ξ, θ)` with `ξ = |z|²/(1+|z|²)`.
///
/// `dV₀ = 2 dξ dθ`, so every node carries the same weight. In the
/// axisymmetric mode there is a single angular cell of width `2π`.
#[derive(Clone)]
pub struct SphereGrid {
    pub mode: GridMode,
    pub n_xi: usize,
    pub n_theta: usize,
    pub h: f64,
    pub dtheta: f64,
    pub weight: f64,
    pub angular: AngularScheme,
    /// Cell centers.
    pub xi: Vec<f64>,
    /// `ξ(1−ξ)/(2h²)` on the `n_xi + 1` cell faces; zero at both poles.
    pub(crate) face: Vec<f64>,
    /// `1/(8ξ(1−ξ))` at cell centers, the coefficient of `∂²_θ`.
    pub(crate) ang: Vec<f64>,
    /// Eigenvalue of the discrete `∂²_θ` on Fourier mode `m`.
    pub(crate) symbol: Vec<f64>,
    fft: Option<(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>,
}

impl fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereGrid")
            .field("mode", &self.mode)
            .field("n_xi", &self.n_xi)
            .field("n_theta", &self.n_theta)
            .field("angular", &self.angular)
            .finish()
    }
}

impl SphereGrid {
    pub fn build(mode: GridMode, n_xi: usize, n_theta: usize) -> Result<Self> {
        if n_xi < MIN_N_XI {
            return Err(Error::Config(format!(
                "n_xi = {n_xi} is below the minimum of {MIN_N_XI}"
            )));
        }
        let n_theta = match mode {
            GridMode::Axisym1D => 1,
            GridMode::Full2D => {
                if n_theta < MIN_N_THETA {
                    return Err(Error::Config(format!(
                        "n_theta = {n_theta} is below the minimum of {MIN_N_THETA}"
                    )));
                }
                n_theta
            }
        };
        let h = 1.0 / n_xi as f64;
        let dtheta = 2.0 * PI / n_theta as f64;
        let xi: Vec<f64> = (0..n_xi).map(|i| (i as f64 + 0.5) * h).collect();
        let face = (0..=n_xi)
            .map(|i| {
                let x = i as f64 * h;
                x * (1.0 - x) / (2.0 * h * h)
            })
            .collect();
        let ang = xi.iter().map(|&x| 1.0 / (8.0 * x * (1.0 - x))).collect();
        let angular = if n_theta.is_power_of_two() {
            AngularScheme::Spectral
        } else {
            AngularScheme::Centered
        };
        let symbol = (0..n_theta)
            .map(|m| match angular {
                AngularScheme::Spectral => {
                    let k = m.min(n_theta - m) as f64;
                    -k * k
                }
                AngularScheme::Centered => {
                    -(2.0 - 2.0 * (2.0 * PI * m as f64 / n_theta as f64).cos())
                        / (dtheta * dtheta)
                }
            })
            .collect();
        let fft = (n_theta > 1).then(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft_forward(n_theta),
                planner.plan_fft_inverse(n_theta),
            )
        });
        Ok(SphereGrid {
            mode,
            n_xi,
            n_theta,
            h,
            dtheta,
            weight: 2.0 * h * dtheta,
            angular,
            xi,
            face,
            ang,
            symbol,
            fft,
        })
    }

    pub fn axisym(n_xi: usize) -> Result<Self> {
        Self::build(GridMode::Axisym1D, n_xi, 1)
    }

    pub fn full(n_xi: usize, n_theta: usize) -> Result<Self> {
        Self::build(GridMode::Full2D, n_xi, n_theta)
    }

    pub fn nodes(&self) -> usize {
        self.n_xi * self.n_theta
    }

    pub fn volume(&self) -> f64 {
        VOLUME
    }

    pub fn weights_sum(&self) -> f64 {
        self.weight * self.nodes() as f64
    }

    pub fn xi_at(&self, node: usize) -> f64 {
        self.xi[node / self.n_theta]
    }

    pub fn theta_at(&self, node: usize) -> f64 {
        (node % self.n_theta) as f64 * self.dtheta
    }

    /// Chart coordinate `z = r e^{iθ}` of a node, with `r² = ξ/(1−ξ)`.
    pub fn z_at(&self, node: usize) -> (f64, f64) {
        let x = self.xi_at(node);
        let r = (x / (1.0 - x)).sqrt();
        let t = self.theta_at(node);
        (r * t.cos(), r * t.sin())
    }

    pub fn zeros(&self) -> Field {
        Field::constant(self.n_xi, self.n_theta, 0.0)
    }

    pub fn constant(&self, c: f64) -> Field {
        Field::constant(self.n_xi, self.n_theta, c)
    }

    pub fn from_fn(&self, f: impl Fn(usize) -> f64) -> Field {
        Field {
            n_xi: self.n_xi,
            n_theta: self.n_theta,
            values: (0..self.nodes()).map(f).collect(),
        }
    }

    /// Field depending on `ξ` only.
    pub fn from_xi(&self, f: impl Fn(f64) -> f64) -> Field {
        self.from_fn(|k| f(self.xi_at(k)))
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.n_xi != self.n_xi || f.n_theta != self.n_theta {
            return Err(Error::Shape {
                expected: self.nodes(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `ρ₀ = 2/(1+|z|²)² = 2(1−ξ)²`.
    pub fn rho0(&self) -> Field {
        self.from_xi(|x| 2.0 * (1.0 - x) * (1.0 - x))
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        let mut out = vec![0.0; f.len()];
        self.laplacian_into(&f.values, &mut out);
        Ok(Field {
            n_xi: self.n_xi,
            n_theta: self.n_theta,
            values: out,
        })
    }

    /// Background Laplacian `Δ₀ = tr_{ω₀} i∂∂̄` in conservative flux form.
    pub fn laplacian_into(&self, f: &[f64], out: &mut [f64]) {
        let nt = self.n_theta;
        for i in 0..self.n_xi {
            let up = self.face[i + 1];
            let dn = self.face[i];
            for j in 0..nt {
                let k = i * nt + j;
                let c = f[k];
                let mut v = 0.0;
                if i + 1 < self.n_xi {
                    v += up * (f[k + nt] - c);
                }
                if i > 0 {
                    v -= dn * (c - f[k - nt]);
                }
                out[k] = v;
            }
        }
        if nt > 1 {
            let mut d2 = vec![0.0; nt];
            let mut buf = vec![Complex::new(0.0, 0.0); nt];
            for i in 0..self.n_xi {
                let row = &f[i * nt..(i + 1) * nt];
                self.theta_second(row, &mut d2, &mut buf);
                let a = self.ang[i];
                for j in 0..nt {
                    out[i * nt + j] += a * d2[j];
                }
            }
        }
    }

    fn theta_second(&self, row: &[f64], out: &mut [f64], buf: &mut [Complex<f64>]) {
        let nt = self.n_theta;
        match self.angular {
            AngularScheme::Centered => {
                let w = 1.0 / (self.dtheta * self.dtheta);
                for j in 0..nt {
                    let l = row[(j + nt - 1) % nt];
                    let r = row[(j + 1) % nt];
                    out[j] = (l - 2.0 * row[j] + r) * w;
                }
            }
            AngularScheme::Spectral => {
                let (fwd, inv) = self.fft.as_ref().expect("fft planned for n_theta > 1");
                for (b, &v) in buf.iter_mut().zip(row) {
                    *b = Complex::new(v, 0.0);
                }
                fwd.process(buf);
                for (b, &s) in buf.iter_mut().zip(&self.symbol) {
                    *b *= s;
                }
                inv.process(buf);
                let scale = 1.0 / nt as f64;
                for (o, b) in out.iter_mut().zip(buf.iter()) {
                    *o = b.re * scale;
                }
            }
        }
    }

    /// `|∂_θ f|²` per node of one ring; for centered differences the average
    /// of the two adjacent one-sided squares, which keeps summation by parts
    /// exact.
    fn theta_grad_sq(&self, row: &[f64], out: &mut [f64], buf: &mut [Complex<f64>]) {
        let nt = self.n_theta;
        match self.angular {
            AngularScheme::Centered => {
                let w = 1.0 / (self.dtheta * self.dtheta);
                for j in 0..nt {
                    let l = row[j] - row[(j + nt - 1) % nt];
                    let r = row[(j + 1) % nt] - row[j];
                    out[j] = 0.5 * (l * l + r * r) * w;
                }
            }
            AngularScheme::Spectral => {
                let (fwd, inv) = self.fft.as_ref().expect("fft planned for n_theta > 1");
                for (b, &v) in buf.iter_mut().zip(row) {
                    *b = Complex::new(v, 0.0);
                }
                fwd.process(buf);
                for (m, b) in buf.iter_mut().enumerate() {
                    let k = if 2 * m == nt {
                        0.0
                    } else if 2 * m < nt {
                        m as f64
                    } else {
                        m as f64 - nt as f64
                    };
                    *b *= Complex::new(0.0, k);
                }
                inv.process(buf);
                let scale = 1.0 / nt as f64;
                for (o, b) in out.iter_mut().zip(buf.iter()) {
                    let d = b.re * scale;
                    *o = d * d;
                }
            }
        }
    }

    /// Pointwise `|∇f|²_{ω₀}`; the radial part averages the two adjacent
    /// face fluxes so that `Σ|∇f|² w = −Σ f Δ₀f w` holds exactly.
    pub fn gradient_sq_background(&self, f: &[f64]) -> Vec<f64> {
        let nt = self.n_theta;
        let mut out = vec![0.0; f.len()];
        for i in 0..self.n_xi {
            for j in 0..nt {
                let k = i * nt + j;
                let mut v = 0.0;
                if i + 1 < self.n_xi {
                    let d = f[k + nt] - f[k];
                    v += self.face[i + 1] * d * d;
                }
                if i > 0 {
                    let d = f[k] - f[k - nt];
                    v += self.face[i] * d * d;
                }
                out[k] = 0.5 * v;
            }
        }
        if nt > 1 {
            let mut g = vec![0.0; nt];
            let mut buf = vec![Complex::new(0.0, 0.0); nt];
            for i in 0..self.n_xi {
                self.theta_grad_sq(&f[i * nt..(i + 1) * nt], &mut g, &mut buf);
                for j in 0..nt {
                    out[i * nt + j] += self.ang[i] * g[j];
                }
            }
        }
        out
    }

    /// `|∇f|²_ω` for the metric with density `metric_density`.
    pub fn gradient_sq(&self, f: &Field, metric_density: &Field) -> Result<Field> {
        self.check(f)?;
        self.check(metric_density)?;
        let rho0 = self.rho0();
        let mut g = self.gradient_sq_background(&f.values);
        for (k, v) in g.iter_mut().enumerate() {
            let d = metric_density.values[k];
            if !(d > 0.0) {
                return Err(Error::MetricDegenerate { node: k, value: d });
            }
            *v *= rho0.values[k] / d;
        }
        Field::new(self.n_xi, self.n_theta, g)
    }

    /// `∫ f dV` where `dV = (density/ρ₀) dV₀`; `None` integrates against `dV₀`.
    pub fn integrate(&self, f: &Field, metric_density: Option<&Field>) -> Result<f64> {
        self.check(f)?;
        match metric_density {
            None => Ok(self.weight * f.values.iter().sum::<f64>()),
            Some(d) => {
                self.check(d)?;
                let rho0 = self.rho0();
                Ok(self.weight
                    * f.values
                        .iter()
                        .zip(&d.values)
                        .zip(&rho0.values)
                        .map(|((&v, &dd), &r)| v * dd / r)
                        .sum::<f64>())
            }
        }
    }

    /// `∫ f · ratio dV₀` with the density ratio `ρ/ρ₀` given directly.
    pub fn integrate_ratio(&self, f: &[f64], ratio: &[f64]) -> f64 {
        self.weight * f.iter().zip(ratio).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn integrate_background(&self, f: &[f64]) -> f64 {
        self.weight * f.iter().sum::<f64>()
    }

    pub fn mean_background(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() / f.len() as f64
    }

    pub(crate) fn fft_plans(&self) -> Option<&(Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)> {
        self.fft.as_ref()
    }
}
