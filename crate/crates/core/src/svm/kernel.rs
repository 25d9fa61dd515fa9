use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel function and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    /// `x·y`
    Linear,
    /// `(x·y + 1)^d`
    Polynomial { degree: u32 },
    /// `exp(-‖x−y‖² / (2σ²))`
    Rbf { sigma2: f64 },
    /// `exp(-‖x−y‖ / (2σ²))`, the Euclidean distance left unsquared.
    RbfUnsquared { sigma2: f64 },
    /// `tanh(x·y + b)`; not positive semi-definite in general.
    Mlp { bias: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { degree: 0 } => {
                Err(Error::Config("polynomial degree must be positive".into()))
            }
            KernelSpec::Rbf { sigma2 } | KernelSpec::RbfUnsquared { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => {
                Err(Error::Config(format!("rbf sigma^2 must be positive, got {sigma2}")))
            }
            KernelSpec::Mlp { bias } if !bias.is_finite() => Err(Error::Config("mlp bias must be finite".into())),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Polynomial { .. } => "polynomial",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::RbfUnsquared { .. } => "rbf-unsquared",
            KernelSpec::Mlp { .. } => "mlp",
        }
    }

    /// The single numeric parameter, if the kernel has one.
    pub fn param(&self) -> Option<f64> {
        match *self {
            KernelSpec::Linear => None,
            KernelSpec::Polynomial { degree } => Some(f64::from(degree)),
            KernelSpec::Rbf { sigma2 } | KernelSpec::RbfUnsquared { sigma2 } => Some(sigma2),
            KernelSpec::Mlp { bias } => Some(bias),
        }
    }

    /// Inverse of [`KernelSpec::name`] / [`KernelSpec::param`].
    pub fn from_name(name: &str, param: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| p.ok_or_else(|| Error::Config(format!("kernel {name} needs a parameter")));
        let spec = match name {
            "linear" => KernelSpec::Linear,
            "polynomial" => {
                let d = need(param)?;
                if d.fract() != 0.0 || d < 1.0 || d > f64::from(u32::MAX) {
                    return Err(Error::Config(format!("polynomial degree must be a positive integer, got {d}")));
                }
                KernelSpec::Polynomial { degree: d as u32 }
            }
            "rbf" => KernelSpec::Rbf { sigma2: need(param)? },
            "rbf-unsquared" => KernelSpec::RbfUnsquared { sigma2: need(param)? },
            "mlp" => KernelSpec::Mlp { bias: need(param)? },
            other => return Err(Error::Config(format!("unknown kernel {other}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Arity {
                expected: x.len(),
                actual: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree } => (dot(x, y) + 1.0).powi(degree as i32),
            KernelSpec::Rbf { sigma2 } => (-squared_distance(x, y) / (2.0 * sigma2)).exp(),
            KernelSpec::RbfUnsquared { sigma2 } => (-squared_distance(x, y).sqrt() / (2.0 * sigma2)).exp(),
            KernelSpec::Mlp { bias } => (dot(x, y) + bias).tanh(),
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Symmetric matrix of kernel values over a training set, filled eagerly.
#[derive(Debug, Clone)]
pub struct GramCache {
    n: usize,
    values: Vec<f64>,
}

impl GramCache {
    pub fn build(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<Self> {
        let n = points.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = spec.eval_unchecked(&points[i], &points[j]);
                if !k.is_finite() {
                    return Err(Error::NonFiniteKernel { i, j, value: k });
                }
                values[i * n + j] = k;
                values[j * n + i] = k;
            }
        }
        Ok(Self { n, values })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.values)
    }
}

/// Smallest eigenvalue of the Gram matrix of `points`.
pub fn gram_psd_check(spec: &KernelSpec, points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::Config("PSD check needs at least two points".into()));
    }
    let gram = GramCache::build(spec, points)?;
    let eig = nalgebra::SymmetricEigen::new(gram.to_matrix());
    Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}
