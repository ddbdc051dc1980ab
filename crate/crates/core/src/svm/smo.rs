//! Dual soft-margin SVM trained by sequential minimal optimization.
//!
//! The solver minimizes `½ αᵀQα − Σα` (the negated dual `W(α)`) subject to
//! `0 ≤ α ≤ C` and `Σ αᵢyᵢ = 0`, with `Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)`. The first
//! index of every pair is the maximal KKT violator. The partner alternates
//! between a seeded random pick among the violating partners and the
//! maximal violating partner; the latter keeps the usual convergence
//! guarantee.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::kernel::{gram_matrix, KernelSpec};
use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

const TAU: f64 = 1e-12;
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SmoParams {
    fn default() -> Self {
        SmoParams {
            c: 1.0,
            tol: 1e-3,
            max_passes: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    points: Vec<Vec<f64>>,
    /// Signed labels, `±1`.
    labels: Vec<f64>,
    alpha: Vec<f64>,
    bias: f64,
    c: f64,
    kernel: KernelSpec,
    iterations: usize,
    converged: bool,
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

pub fn train_smo(
    points: &[Vec<f64>],
    labels: &[ClassLabel],
    kernel: &KernelSpec,
    params: &SmoParams,
) -> Result<SvmModel> {
    let n = points.len();
    if n != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("SVM needs at least 2 points, got {n}")));
    }
    if !(labels.contains(&ClassLabel::Wild) && labels.contains(&ClassLabel::Mutated)) {
        return Err(Error::InvalidArgument("SVM training data has a single class".into()));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("SVM feature value".into()));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::config("C", format!("must be positive, got {}", params.c)));
    }
    if !(params.tol > 0.0) {
        return Err(Error::config("tol", "must be positive"));
    }
    kernel.validate()?;

    let k = gram_matrix(kernel, points)?;
    let y: Vec<f64> = labels.iter().map(|l| l.signed()).collect();
    let c = params.c;
    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − Σα.
    let mut grad = vec![-1.0; n];
    let mut rng = rng_from_seed(params.seed);
    let max_iter = params.max_passes.max(1) * n.max(10);

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: argmax over I_up of −yG; partner bound M: min over I_low.
        let mut i = usize::MAX;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_min = usize::MAX;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(y[t], alpha[t], c) && v > m_up {
                m_up = v;
                i = t;
            }
            if in_low(y[t], alpha[t], c) && v < m_low {
                m_low = v;
                j_min = t;
            }
        }
        if i == usize::MAX || j_min == usize::MAX || m_up - m_low <= params.tol {
            converged = true;
            break;
        }

        let j = if iterations % 2 == 0 {
            let candidates: Vec<usize> = (0..n)
                .filter(|&t| {
                    t != i && in_low(y[t], alpha[t], c) && m_up - (-y[t] * grad[t]) > params.tol
                })
                .collect();
            if candidates.is_empty() {
                j_min
            } else {
                candidates[rng.random_range(0..candidates.len())]
            }
        } else {
            j_min
        };
        iterations += 1;
        take_step(i, j, &k, &y, c, &mut alpha, &mut grad);
    }

    let bias = compute_bias(&y, &alpha, &grad, c);
    Ok(SvmModel {
        points: points.to_vec(),
        labels: y,
        alpha,
        bias,
        c,
        kernel: kernel.clone(),
        iterations,
        converged,
    })
}

/// Move along `αᵢ += yᵢt`, `αⱼ −= yⱼt` by the clipped Newton step.
fn take_step(
    i: usize,
    j: usize,
    k: &[Vec<f64>],
    y: &[f64],
    c: f64,
    alpha: &mut [f64],
    grad: &mut [f64],
) {
    let violation = (-y[i] * grad[i]) - (-y[j] * grad[j]);
    let mut eta = k[i][i] + k[j][j] - 2.0 * k[i][j];
    if eta <= 0.0 {
        eta = TAU;
    }
    let room_i = if y[i] > 0.0 { c - alpha[i] } else { alpha[i] };
    let room_j = if y[j] > 0.0 { alpha[j] } else { c - alpha[j] };
    let newton = violation / eta;
    let t = newton.min(room_i).min(room_j);
    if !(t > 0.0) {
        return;
    }
    // Land exactly on a bound when the step was clipped there.
    alpha[i] = if t == room_i {
        if y[i] > 0.0 { c } else { 0.0 }
    } else {
        alpha[i] + y[i] * t
    };
    alpha[j] = if t == room_j {
        if y[j] > 0.0 { 0.0 } else { c }
    } else {
        alpha[j] - y[j] * t
    };
    for (s, g) in grad.iter_mut().enumerate() {
        *g += y[s] * t * (k[s][i] - k[s][j]);
    }
}

/// Average over free support vectors, else the midpoint of the feasible
/// bias interval.
fn compute_bias(y: &[f64], alpha: &[f64], grad: &[f64], c: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += v;
            count += 1;
        }
        if in_up(y[t], alpha[t], c) {
            up = up.max(v);
        }
        if in_low(y[t], alpha[t], c) {
            low = low.min(v);
        }
    }
    if count > 0 {
        sum / count as f64
    } else if up.is_finite() && low.is_finite() {
        0.5 * (up + low)
    } else if up.is_finite() {
        up
    } else {
        low
    }
}

impl SvmModel {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn signed_labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn support_count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a > 0.0).count()
    }

    /// `f(x) = Σ αᵢyᵢK(xᵢ, x) + b`.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut f = self.bias;
        for ((p, &y), &a) in self.points.iter().zip(&self.labels).zip(&self.alpha) {
            if a > 0.0 {
                f += a * y * self.kernel.eval_unchecked(p, x);
            }
        }
        Ok(f)
    }

    /// Positive iff `f(x) > 0`; `f(x) = 0` goes to the wild class.
    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        Ok(label_from_decision(self.decision_function(x)?))
    }

    /// `min yᵢ f(xᵢ)` over the given set.
    pub fn margin(&self, points: &[Vec<f64>], labels: &[ClassLabel]) -> Result<f64> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("margin of an empty set".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        points
            .iter()
            .zip(labels)
            .map(|(p, l)| Ok(l.signed() * self.decision_function(p)?))
            .try_fold(f64::INFINITY, |m, v: Result<f64>| Ok(m.min(v?)))
    }

    /// Dual objective `W(α) = Σα − ½ΣΣ αᵢαⱼyᵢyⱼK(xᵢ,xⱼ)`.
    pub fn dual_objective(&self) -> f64 {
        dual_objective(&self.kernel, &self.points, &self.labels, &self.alpha)
    }

    /// Largest violation of the KKT conditions over the training points:
    /// `α=0 ⇒ yf ≥ 1`, `0<α<C ⇒ yf = 1`, `α=C ⇒ yf ≤ 1`.
    pub fn kkt_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for ((p, &y), &a) in self.points.iter().zip(&self.labels).zip(&self.alpha) {
            let yf = y * self.decision_function(p).expect("training point");
            let v = if a <= 0.0 {
                1.0 - yf
            } else if a >= self.c {
                yf - 1.0
            } else {
                (yf - 1.0).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Sum `Σ αᵢyᵢ`, zero at a feasible point.
    pub fn equality_residual(&self) -> f64 {
        self.alpha.iter().zip(&self.labels).map(|(a, y)| a * y).sum()
    }

    pub fn to_record(&self) -> SvmRecord {
        let support = self
            .points
            .iter()
            .zip(&self.labels)
            .zip(&self.alpha)
            .filter(|(_, &a)| a > 0.0)
            .map(|((x, &y), &alpha)| SupportVector {
                x: x.clone(),
                y,
                alpha,
            })
            .collect();
        SvmRecord {
            version: MODEL_VERSION,
            kernel: self.kernel.clone(),
            c: self.c,
            bias: self.bias,
            support,
        }
    }

    pub fn from_record(record: SvmRecord) -> Result<Self> {
        if record.version != MODEL_VERSION {
            return Err(Error::SchemaVersion {
                expected: MODEL_VERSION,
                found: record.version,
            });
        }
        let (points, (labels, alpha)) = record
            .support
            .into_iter()
            .map(|s| (s.x, (s.y, s.alpha)))
            .unzip();
        Ok(SvmModel {
            points,
            labels,
            alpha,
            bias: record.bias,
            c: record.c,
            kernel: record.kernel,
            iterations: 0,
            converged: true,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("serializable record")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: SvmRecord =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_record(record)
    }
}

pub fn label_from_decision(f: f64) -> ClassLabel {
    if f > 0.0 {
        ClassLabel::Mutated
    } else {
        ClassLabel::Wild
    }
}

pub fn dual_objective(kernel: &KernelSpec, points: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = points.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if alpha[j] != 0.0 {
                quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval_unchecked(&points[i], &points[j]);
            }
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Serialized form: kernel, `C`, bias and the support triples with `α > 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmRecord {
    pub version: u32,
    pub kernel: KernelSpec,
    pub c: f64,
    pub bias: f64,
    pub support: Vec<SupportVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub x: Vec<f64>,
    pub y: f64,
    pub alpha: f64,
}
