use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

use super::formulas::{gncl_target, mean, mnce_penalty_gradient, mnce_posterior, ncl_penalty_gradient};
use super::gate::GatingNetwork;
use super::mlp::{MlpNetwork, WeightDeltas};

const RECORD_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub eta_expert: f64,
    pub eta_gate: f64,
    pub hidden: usize,
    pub experts: usize,
    pub lambda_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            eta_expert: 0.15,
            eta_gate: 0.1,
            hidden: 4,
            experts: 4,
            lambda_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be at least 1"));
        }
        for (field, eta) in [("eta_expert", self.eta_expert), ("eta_gate", self.eta_gate)] {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {eta}")));
            }
        }
        if self.hidden == 0 {
            return Err(Error::config("hidden", "must be at least 1"));
        }
        if self.experts < 2 {
            return Err(Error::config("experts", format!("need at least 2, got {}", self.experts)));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::config("lambda_grid", "must not be empty"));
        }
        for &l in &self.lambda_grid {
            check_lambda(l)?;
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::config("lambda", format!("must lie in [0, 1], got {lambda}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Ncl,
    Me,
    GatedNcl,
    Mnce,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Ncl => "NCL",
            Variant::Me => "ME",
            Variant::GatedNcl => "Gated-NCL",
            Variant::Mnce => "MNCE",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleModel {
    pub variant: Variant,
    pub lambda: f64,
    pub experts: Vec<MlpNetwork>,
    pub gate: Option<GatingNetwork>,
    pub config: TrainConfig,
}

impl EnsembleModel {
    /// Combined output: the plain mean for NCL, `Σ O_j g_j` otherwise.
    pub fn output(&self, x: &[f64]) -> Result<f64> {
        let o = self
            .experts
            .iter()
            .map(|e| e.forward(x).map(|f| f.output[0]))
            .collect::<Result<Vec<f64>>>()?;
        match &self.gate {
            None => Ok(mean(&o)),
            Some(gate) => {
                let g = gate.forward(x)?.g;
                Ok(o.iter().zip(&g).map(|(a, b)| a * b).sum())
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<(f64, ClassLabel)> {
        let out = self.output(x)?;
        Ok((out, label_from_output(out)))
    }

    pub fn to_record(&self) -> EnsembleRecord {
        EnsembleRecord {
            version: RECORD_VERSION,
            variant: self.variant,
            experts: self.experts.len(),
            lambda: self.lambda,
            config: self.config.clone(),
            expert_weights: self.experts.iter().map(NetworkRecord::from_network).collect(),
            gate_weights: self.gate.as_ref().map(|g| NetworkRecord::from_network(&g.net)),
        }
    }

    pub fn from_record(record: &EnsembleRecord) -> Result<Self> {
        if record.version != RECORD_VERSION {
            return Err(Error::SchemaVersion {
                expected: RECORD_VERSION,
                found: record.version,
            });
        }
        if record.expert_weights.len() != record.experts {
            return Err(Error::Malformed(format!(
                "record declares {} experts but stores {}",
                record.experts,
                record.expert_weights.len()
            )));
        }
        let experts = record
            .expert_weights
            .iter()
            .map(NetworkRecord::to_network)
            .collect::<Result<Vec<_>>>()?;
        let gate = match &record.gate_weights {
            Some(g) => Some(GatingNetwork::new(g.to_network()?)),
            None => None,
        };
        if (record.variant == Variant::Ncl) != gate.is_none() {
            return Err(Error::Malformed("gate presence does not match variant".into()));
        }
        Ok(EnsembleModel {
            variant: record.variant,
            lambda: record.lambda,
            experts,
            gate,
            config: record.config.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_record()).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: EnsembleRecord =
            serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_record(&record)
    }
}

/// Label 1 (mutated) iff the combined output exceeds 0.5.
pub fn label_from_output(out: f64) -> ClassLabel {
    if out > 0.5 {
        ClassLabel::Mutated
    } else {
        ClassLabel::Wild
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub version: u32,
    pub variant: Variant,
    pub experts: usize,
    pub lambda: f64,
    pub config: TrainConfig,
    pub expert_weights: Vec<NetworkRecord>,
    pub gate_weights: Option<NetworkRecord>,
}

/// Weight matrices flattened row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub inputs: usize,
    pub hidden: usize,
    pub outputs: usize,
    pub w_h: Vec<f64>,
    pub w_y: Vec<f64>,
}

impl NetworkRecord {
    fn from_network(net: &MlpNetwork) -> Self {
        NetworkRecord {
            inputs: net.inputs(),
            hidden: net.hidden(),
            outputs: net.outputs(),
            w_h: net.w_h.iter().flatten().copied().collect(),
            w_y: net.w_y.iter().flatten().copied().collect(),
        }
    }

    fn to_network(&self) -> Result<MlpNetwork> {
        if self.w_h.len() != self.hidden * (self.inputs + 1)
            || self.w_y.len() != self.outputs * (self.hidden + 1)
        {
            return Err(Error::Malformed("weight matrix sizes do not match shape".into()));
        }
        Ok(MlpNetwork {
            w_h: self.w_h.chunks(self.inputs + 1).map(<[f64]>::to_vec).collect(),
            w_y: self.w_y.chunks(self.hidden + 1).map(<[f64]>::to_vec).collect(),
        })
    }
}

/// Expert `i` starts from sub-seed `(seed, "expert", i)`.
pub fn init_experts(inputs: usize, cfg: &TrainConfig) -> Vec<MlpNetwork> {
    (0..cfg.experts)
        .map(|i| MlpNetwork::seeded(inputs, cfg.hidden, 1, derive_seed(cfg.seed, "expert", i as u64)))
        .collect()
}

pub fn init_gate(inputs: usize, cfg: &TrainConfig) -> GatingNetwork {
    GatingNetwork::seeded(inputs, cfg.hidden, cfg.experts, derive_seed(cfg.seed, "gate", 0))
}

/// Pattern order for one epoch; `stream` separates the expert and gate
/// training stages.
pub fn epoch_order(n: usize, seed: u64, stream: &str, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(derive_seed(seed, stream, epoch as u64)));
    order
}

fn expert_outputs(experts: &[MlpNetwork], x: &[f64]) -> Result<(Vec<super::mlp::Forward>, Vec<f64>)> {
    let fwd = experts.iter().map(|e| e.forward(x)).collect::<Result<Vec<_>>>()?;
    let o = fwd.iter().map(|f| f.output[0]).collect();
    Ok((fwd, o))
}

/// NCL expert deltas for one pattern. Expert `i` descends
/// `½(y − O_i)² + λ P_i`, with error factor `(y − O_i) − λ ∂P_i/∂O_i`.
pub fn ncl_deltas(experts: &[MlpNetwork], x: &[f64], y: f64, lambda: f64, eta: f64) -> Result<Vec<WeightDeltas>> {
    let (fwd, o) = expert_outputs(experts, x)?;
    Ok(experts
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let err = (y - o[i]) - lambda * ncl_penalty_gradient(&o, i);
            e.deltas(x, &fwd[i], &[err], eta)
        })
        .collect())
}

/// Gate deltas toward the expertise targets of frozen experts.
pub fn gncl_gate_deltas(gate: &GatingNetwork, expert_out: &[f64], x: &[f64], y: f64, eta: f64) -> Result<WeightDeltas> {
    let gf = gate.forward(x)?;
    let h = gncl_target(y, expert_out);
    Ok(gate.deltas(x, &gf, &h, eta))
}

/// Simultaneous MNCE deltas for experts and gate, all computed from the
/// weights before the update.
pub fn mnce_deltas(
    experts: &[MlpNetwork],
    gate: &GatingNetwork,
    x: &[f64],
    y: f64,
    lambda: f64,
    eta_expert: f64,
    eta_gate: f64,
) -> Result<(Vec<WeightDeltas>, WeightDeltas)> {
    let (fwd, o) = expert_outputs(experts, x)?;
    let gf = gate.forward(x)?;
    let h = mnce_posterior(y, &o, &gf.g, lambda);
    let expert_deltas = experts
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let err = h[i] * ((y - o[i]) - lambda * mnce_penalty_gradient(&o, &gf.g, i));
            e.deltas(x, &fwd[i], &[err], eta_expert)
        })
        .collect();
    Ok((expert_deltas, gate.deltas(x, &gf, &h, eta_gate)))
}

fn check_data(points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig, lambda: f64) -> Result<usize> {
    cfg.validate()?;
    check_lambda(lambda)?;
    if points.is_empty() {
        return Err(Error::NoSamples);
    }
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: labels.len(),
        });
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.len(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training input".into()));
    }
    Ok(d)
}

fn check_epoch(nets: &[&MlpNetwork], epoch: usize) -> Result<()> {
    if nets.iter().all(|n| n.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("weights diverged in epoch {epoch}")))
    }
}

fn train_ncl_experts(points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig, lambda: f64) -> Result<Vec<MlpNetwork>> {
    let d = check_data(points, labels, cfg, lambda)?;
    let mut experts = init_experts(d, cfg);
    for epoch in 0..cfg.epochs {
        for idx in epoch_order(points.len(), cfg.seed, "epoch", epoch) {
            let deltas = ncl_deltas(&experts, &points[idx], labels[idx].unit(), lambda, cfg.eta_expert)?;
            for (e, dl) in experts.iter_mut().zip(&deltas) {
                e.apply(dl);
            }
        }
        check_epoch(&experts.iter().collect::<Vec<_>>(), epoch)?;
    }
    Ok(experts)
}

pub fn train_ncl(points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig, lambda: f64) -> Result<EnsembleModel> {
    let experts = train_ncl_experts(points, labels, cfg, lambda)?;
    Ok(EnsembleModel {
        variant: Variant::Ncl,
        lambda,
        experts,
        gate: None,
        config: cfg.clone(),
    })
}

/// Second stage of Gated NCL: the experts stay fixed while the gate learns
/// the expertise targets.
pub fn train_gate_stage(
    experts: &[MlpNetwork],
    points: &[Vec<f64>],
    labels: &[ClassLabel],
    cfg: &TrainConfig,
) -> Result<GatingNetwork> {
    let d = check_data(points, labels, cfg, 0.0)?;
    if experts.len() != cfg.experts {
        return Err(Error::DimensionMismatch {
            expected: cfg.experts,
            found: experts.len(),
        });
    }
    let outputs = points
        .iter()
        .map(|x| expert_outputs(experts, x).map(|(_, o)| o))
        .collect::<Result<Vec<_>>>()?;
    let mut gate = init_gate(d, cfg);
    for epoch in 0..cfg.epochs {
        for idx in epoch_order(points.len(), cfg.seed, "gate-epoch", epoch) {
            let dl = gncl_gate_deltas(&gate, &outputs[idx], &points[idx], labels[idx].unit(), cfg.eta_gate)?;
            gate.net.apply(&dl);
        }
        check_epoch(&[&gate.net], epoch)?;
    }
    Ok(gate)
}

pub fn train_gated_ncl(points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig, lambda: f64) -> Result<EnsembleModel> {
    let experts = train_ncl_experts(points, labels, cfg, lambda)?;
    let gate = train_gate_stage(&experts, points, labels, cfg)?;
    Ok(EnsembleModel {
        variant: Variant::GatedNcl,
        lambda,
        experts,
        gate: Some(gate),
        config: cfg.clone(),
    })
}

fn train_mixture(
    variant: Variant,
    points: &[Vec<f64>],
    labels: &[ClassLabel],
    cfg: &TrainConfig,
    lambda: f64,
) -> Result<EnsembleModel> {
    let d = check_data(points, labels, cfg, lambda)?;
    let mut experts = init_experts(d, cfg);
    let mut gate = init_gate(d, cfg);
    for epoch in 0..cfg.epochs {
        for idx in epoch_order(points.len(), cfg.seed, "epoch", epoch) {
            let (ed, gd) = mnce_deltas(
                &experts,
                &gate,
                &points[idx],
                labels[idx].unit(),
                lambda,
                cfg.eta_expert,
                cfg.eta_gate,
            )?;
            for (e, dl) in experts.iter_mut().zip(&ed) {
                e.apply(dl);
            }
            gate.net.apply(&gd);
        }
        let mut nets: Vec<&MlpNetwork> = experts.iter().collect();
        nets.push(&gate.net);
        check_epoch(&nets, epoch)?;
    }
    Ok(EnsembleModel {
        variant,
        lambda,
        experts,
        gate: Some(gate),
        config: cfg.clone(),
    })
}

pub fn train_mnce(points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig, lambda: f64) -> Result<EnsembleModel> {
    train_mixture(Variant::Mnce, points, labels, cfg, lambda)
}

/// Mixture of experts: the MNCE trainer with the penalty switched off.
pub fn train_me(points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig) -> Result<EnsembleModel> {
    train_mixture(Variant::Me, points, labels, cfg, 0.0)
}

pub fn train(variant: Variant, points: &[Vec<f64>], labels: &[ClassLabel], cfg: &TrainConfig, lambda: f64) -> Result<EnsembleModel> {
    match variant {
        Variant::Ncl => train_ncl(points, labels, cfg, lambda),
        Variant::Me => train_me(points, labels, cfg),
        Variant::GatedNcl => train_gated_ncl(points, labels, cfg, lambda),
        Variant::Mnce => train_mnce(points, labels, cfg, lambda),
    }
}
