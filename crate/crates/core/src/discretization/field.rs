use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of a scalar function, one per grid node, stored row-major with
/// `ξ` as the slow index and `θ` as the fast one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub n_xi: usize,
    pub n_theta: usize,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(n_xi: usize, n_theta: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_xi * n_theta {
            return Err(Error::Shape {
                expected: n_xi * n_theta,
                got: values.len(),
            });
        }
        Ok(Field {
            n_xi,
            n_theta,
            values,
        })
    }

    pub fn constant(n_xi: usize, n_theta: usize, c: f64) -> Self {
        Field {
            n_xi,
            n_theta,
            values: vec![c; n_xi * n_theta],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_shape(&self, other: &Field) -> Result<()> {
        if self.n_xi != other.n_xi || self.n_theta != other.n_theta {
            return Err(Error::Shape {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            n_xi: self.n_xi,
            n_theta: self.n_theta,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.same_shape(other)?;
        Ok(Field {
            n_xi: self.n_xi,
            n_theta: self.n_theta,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_scalar(&self, c: f64) -> Field {
        self.map(|v| v + c)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index and value of the smallest sample.
    pub fn argmin(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc })
    }

    pub fn osc(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
