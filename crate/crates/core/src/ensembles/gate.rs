use crate::error::{Error, Result};

use super::mlp::{Forward, MlpNetwork, WeightDeltas};

/// `exp(v_i) / Σ exp(v_j)`, computed after subtracting the maximum.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("softmax input".into()));
    }
    Ok(softmax_unchecked(v))
}

pub(crate) fn softmax_unchecked(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// MLP with one sigmoid hidden layer and `M` sigmoid outputs `O_g`,
/// followed by a softmax producing the expert weights `g`.
#[derive(Clone, Debug, PartialEq)]
pub struct GatingNetwork {
    pub net: MlpNetwork,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateForward {
    pub inner: Forward,
    pub g: Vec<f64>,
}

impl GatingNetwork {
    pub fn new(net: MlpNetwork) -> Self {
        GatingNetwork { net }
    }

    pub fn seeded(inputs: usize, hidden: usize, experts: usize, seed: u64) -> Self {
        GatingNetwork::new(MlpNetwork::seeded(inputs, hidden, experts, seed))
    }

    pub fn experts(&self) -> usize {
        self.net.outputs()
    }

    pub fn forward(&self, x: &[f64]) -> Result<GateForward> {
        let inner = self.net.forward(x)?;
        Ok(self.finish(inner))
    }

    fn finish(&self, inner: Forward) -> GateForward {
        let g = softmax_unchecked(&inner.output);
        GateForward { inner, g }
    }

    /// Gate update toward targets `h`:
    /// `Δw_yg = η_g (h − g) ⊙ O_g(1 − O_g) O_hgᵀ` and the matching
    /// hidden-layer rule. The `O_g(1 − O_g)` factor is applied to the
    /// pre-softmax outputs as written in the update rules.
    pub fn deltas(&self, x: &[f64], fwd: &GateForward, h: &[f64], eta: f64) -> WeightDeltas {
        let error: Vec<f64> = h.iter().zip(&fwd.g).map(|(h, g)| h - g).collect();
        self.net.deltas(x, &fwd.inner, &error, eta)
    }
}
