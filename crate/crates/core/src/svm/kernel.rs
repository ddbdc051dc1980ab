use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kernel functions over real vectors.
///
/// `GaussianOver` substitutes an arbitrary inner kernel `κ` for the inner
/// product inside the Gaussian:
/// `exp(-(κ(x,x) + κ(z,z) - 2κ(x,z)) / 2σ²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Gaussian { sigma: f64 },
    Sigmoid { a: f64, b: f64 },
    GaussianOver { sigma: f64, inner: Box<KernelSpec> },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Gaussian { sigma } => check_sigma(*sigma),
            KernelSpec::Sigmoid { a, b } => {
                if a.is_finite() && b.is_finite() {
                    Ok(())
                } else {
                    Err(Error::config("sigmoid", "a and b must be finite"))
                }
            }
            KernelSpec::GaussianOver { sigma, inner } => {
                check_sigma(*sigma)?;
                inner.validate()
            }
        }
    }

    /// Kernel value; the caller guarantees equal lengths.
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Gaussian { sigma } => {
                let sq: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Sigmoid { a, b } => (a * dot(x, z) + b).tanh(),
            KernelSpec::GaussianOver { sigma, inner } => {
                let sq = inner.eval_unchecked(x, x) + inner.eval_unchecked(z, z)
                    - 2.0 * inner.eval_unchecked(x, z);
                (-sq / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    pub fn eval(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        if x.len() != z.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                found: z.len(),
            });
        }
        Ok(self.eval_unchecked(x, z))
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            KernelSpec::Sigmoid { a, b } => write!(f, "sigmoid(a={a}, b={b})"),
            KernelSpec::GaussianOver { sigma, inner } => {
                write!(f, "gaussian(sigma={sigma}) over {inner}")
            }
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::config("sigma", format!("must be positive, got {sigma}")))
    }
}

pub(crate) fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(kernel: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    kernel.eval(x, z)
}

/// Symmetric Gram matrix. The upper triangle is computed and mirrored, so
/// `K[i][j]` and `K[j][i]` are the same bits.
pub fn gram_matrix(kernel: &KernelSpec, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidArgument("Gram matrix of an empty set".into()));
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.len(),
        });
    }
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval_unchecked(&points[i], &points[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    Ok(k)
}

/// Sigmoid slope `a = 1/d` for `d` features.
pub fn default_sigmoid_a(features: usize) -> Result<f64> {
    if features == 0 {
        return Err(Error::InvalidArgument(
            "sigmoid default needs at least one feature".into(),
        ));
    }
    Ok(1.0 / features as f64)
}

/// Median Euclidean distance over all distinct pairs; used as the default
/// Gaussian width. Falls back to 1 when every pair coincides.
pub fn median_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut dists = Vec::with_capacity(points.len() * points.len().saturating_sub(1) / 2);
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            dists.push(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}
