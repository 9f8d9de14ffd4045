use crate::discretization::{Field, GridMode, SphereGrid};
use crate::error::{Error, Result};
use crate::geometry::{
    divisor_log_weight, regularized_reference_density, theta_eps_density, DivisorData, FlowParams,
    Twist,
};

/// Everything about one flow instance that does not change in time.
#[derive(Debug, Clone)]
pub struct Problem {
    pub grid: SphereGrid,
    pub divisor: DivisorData,
    pub params: FlowParams,
    pub rho0: Field,
    /// `|s|²_h` per node.
    pub modulus: Field,
    /// `log(ε²+|s|²_h)`.
    pub log_weight: Field,
    /// Zero-order forcing `G`.
    pub forcing: Field,
    /// Density of `θ_ε` (absent at `ε = 0`).
    pub theta: Option<Field>,
    /// Density of the regularized cone reference metric (absent at `ε = 0`).
    pub reference: Option<Field>,
}

impl Problem {
    pub fn new(grid: SphereGrid, divisor: DivisorData, params: FlowParams) -> Result<Self> {
        if grid.mode == GridMode::Axisym1D && !divisor.is_axisymmetric() {
            return Err(Error::Config(
                "the axisymmetric grid only supports divisors contained in {0, inf}".into(),
            ));
        }
        if (params.lambda - divisor.lambda()).abs() > 1e-12 {
            return Err(Error::Parameter {
                name: "lambda",
                value: params.lambda,
                constraint: "must equal half the divisor degree",
            });
        }
        if let Twist::Beta(b) = &params.twist {
            grid.check(&b.phi_eps)?;
        }
        let modulus = divisor.modulus_sq(&grid);
        let log_weight = divisor_log_weight(&grid, &divisor, params.epsilon)?;
        let forcing = params.forcing(&log_weight)?;
        let (theta, reference) = if params.epsilon > 0.0 {
            let angle = match &params.twist {
                Twist::Plain => params.gamma,
                Twist::Beta(b) => b.beta,
            };
            (
                Some(theta_eps_density(&grid, &divisor, params.epsilon)?),
                Some(regularized_reference_density(
                    &grid,
                    &divisor,
                    angle,
                    params.epsilon,
                    params.k,
                )?),
            )
        } else {
            (None, None)
        };
        Ok(Problem {
            rho0: grid.rho0(),
            grid,
            divisor,
            params,
            modulus,
            log_weight,
            forcing,
            theta,
            reference,
        })
    }

    pub fn mu(&self) -> f64 {
        self.params.mu_gamma
    }

    /// `1 + Δ₀φ`, the density of `ω_φ` relative to `ω₀`.
    pub fn density_ratio(&self, phi: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; phi.len()];
        self.grid.laplacian_into(phi, &mut d);
        for v in &mut d {
            *v += 1.0;
        }
        d
    }

    /// `log(1+Δ₀φ) + μφ + G`; fails on the first non-admissible node.
    pub fn rhs(&self, phi: &[f64], ratio: &[f64]) -> Result<Vec<f64>> {
        let mu = self.mu();
        let mut out = Vec::with_capacity(phi.len());
        for k in 0..phi.len() {
            let d = ratio[k];
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Inadmissible { node: k, min: d });
            }
            out.push(d.ln() + mu * phi[k] + self.forcing.values[k]);
        }
        Ok(out)
    }

    pub fn field(&self, values: Vec<f64>) -> Field {
        Field {
            n_xi: self.grid.n_xi,
            n_theta: self.grid.n_theta,
            values,
        }
    }
}
