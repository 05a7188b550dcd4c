use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::check_dim;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    /// `(x . y + 1)^degree`
    Polynomial { degree: u32 },
    /// `exp(-|x - y|^2 / bandwidth_sq)`
    Gaussian { bandwidth_sq: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Polynomial { degree: 5 }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree } if degree == 0 => Err(Error::InvalidParameter(
                "polynomial degree must be at least 1".into(),
            )),
            KernelSpec::Gaussian { bandwidth_sq } if !(bandwidth_sq > 0.0 && bandwidth_sq.is_finite()) => {
                Err(Error::InvalidParameter("bandwidth must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree } => (dot(x, y) + 1.0).powi(degree as i32),
            KernelSpec::Gaussian { bandwidth_sq } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / bandwidth_sq).exp()
            }
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Dense row-major Gram matrix.
pub fn gram_matrix(spec: &KernelSpec, xs: &[&[f64]]) -> Vec<f64> {
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = spec.eval_unchecked(xs[i], xs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}
