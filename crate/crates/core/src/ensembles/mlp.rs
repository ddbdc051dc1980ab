use rand::Rng as _;

use crate::error::{Error, Result};
use crate::seed::{rng_from_seed, Rng};

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// One-hidden-layer perceptron with sigmoid hidden and output units.
///
/// `w_h[h]` holds the weights of hidden unit `h` over `[x; 1]`, and
/// `w_y[k]` the weights of output unit `k` over `[O_h; 1]` (bias last).
#[derive(Clone, Debug, PartialEq)]
pub struct MlpNetwork {
    pub w_h: Vec<Vec<f64>>,
    pub w_y: Vec<Vec<f64>>,
}

/// Activations of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Forward {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Weight changes with the same shapes as the network.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDeltas {
    pub w_h: Vec<Vec<f64>>,
    pub w_y: Vec<Vec<f64>>,
}

impl MlpNetwork {
    pub fn zeros(inputs: usize, hidden: usize, outputs: usize) -> Self {
        MlpNetwork {
            w_h: vec![vec![0.0; inputs + 1]; hidden],
            w_y: vec![vec![0.0; hidden + 1]; outputs],
        }
    }

    /// Weights i.i.d. uniform in `[-0.5, 0.5]`.
    pub fn random(inputs: usize, hidden: usize, outputs: usize, rng: &mut Rng) -> Self {
        let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.random_range(-0.5..=0.5)).collect() };
        let w_h = (0..hidden).map(|_| draw(inputs + 1)).collect();
        let w_y = (0..outputs).map(|_| draw(hidden + 1)).collect();
        MlpNetwork { w_h, w_y }
    }

    pub fn seeded(inputs: usize, hidden: usize, outputs: usize, seed: u64) -> Self {
        Self::random(inputs, hidden, outputs, &mut rng_from_seed(seed))
    }

    pub fn inputs(&self) -> usize {
        self.w_h.first().map_or(0, |r| r.len() - 1)
    }

    pub fn hidden(&self) -> usize {
        self.w_h.len()
    }

    pub fn outputs(&self) -> usize {
        self.w_y.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.inputs() {
            return Err(Error::DimensionMismatch {
                expected: self.inputs(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> Forward {
        let hidden: Vec<f64> = self.w_h.iter().map(|w| sigmoid(affine(w, x))).collect();
        let output = self.w_y.iter().map(|w| sigmoid(affine(w, &hidden))).collect();
        Forward { hidden, output }
    }

    /// Backpropagated weight changes for per-output error signals `e`.
    ///
    /// Output unit `k` receives `δ_k = e_k O_k(1 − O_k)`; then
    /// `Δw_y = η δ [O_h; 1]ᵀ` and `Δw_h = η (w_yᵀδ ⊙ O_h(1 − O_h)) [x; 1]ᵀ`,
    /// using the weights before the update. With `e = y − O` this is plain
    /// gradient descent on `½(y − O)²`.
    pub fn deltas(&self, x: &[f64], fwd: &Forward, error: &[f64], eta: f64) -> WeightDeltas {
        let delta_out: Vec<f64> = error
            .iter()
            .zip(&fwd.output)
            .map(|(e, o)| e * (o * (1.0 - o)))
            .collect();
        let w_y = delta_out
            .iter()
            .map(|d| {
                let mut row: Vec<f64> = fwd.hidden.iter().map(|h| eta * d * h).collect();
                row.push(eta * d);
                row
            })
            .collect();
        let w_h = fwd
            .hidden
            .iter()
            .enumerate()
            .map(|(h, oh)| {
                let back: f64 = self.w_y.iter().zip(&delta_out).map(|(w, d)| w[h] * d).sum();
                let delta_h = back * (oh * (1.0 - oh));
                let mut row: Vec<f64> = x.iter().map(|xi| eta * delta_h * xi).collect();
                row.push(eta * delta_h);
                row
            })
            .collect();
        WeightDeltas { w_h, w_y }
    }

    pub fn apply(&mut self, deltas: &WeightDeltas) {
        for (w, d) in self.w_h.iter_mut().zip(&deltas.w_h) {
            for (wi, di) in w.iter_mut().zip(d) {
                *wi += di;
            }
        }
        for (w, d) in self.w_y.iter_mut().zip(&deltas.w_y) {
            for (wi, di) in w.iter_mut().zip(d) {
                *wi += di;
            }
        }
    }

    /// One plain backpropagation step on `½(y − O)²` for a single-output
    /// network.
    pub fn backprop_step(&mut self, x: &[f64], y: f64, eta: f64) -> Result<()> {
        let fwd = self.forward(x)?;
        let d = self.deltas(x, &fwd, &[y - fwd.output[0]], eta);
        self.apply(&d);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.w_h.iter().chain(&self.w_y).flatten().all(|v| v.is_finite())
    }

    /// All weights, hidden layer first, row-major.
    pub fn flat_weights(&self) -> Vec<f64> {
        self.w_h.iter().chain(&self.w_y).flatten().copied().collect()
    }
}

fn affine(w: &[f64], x: &[f64]) -> f64 {
    let (bias, weights) = w.split_last().expect("bias column");
    weights.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + bias
}
