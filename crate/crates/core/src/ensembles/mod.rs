//! Neural network ensembles: negative correlation learning, mixtures of
//! experts, gated NCL and mixtures of negatively correlated experts.

mod formulas;
mod gate;
mod mlp;
mod train;

pub use formulas::{gncl_target, mean, mnce_penalty_gradient, mnce_posterior, ncl_penalty, ncl_penalty_gradient};
pub use gate::{softmax, GateForward, GatingNetwork};
pub use mlp::{sigmoid, Forward, MlpNetwork, WeightDeltas};
pub use train::{
    epoch_order, gncl_gate_deltas, init_experts, init_gate, label_from_output, mnce_deltas, ncl_deltas, train,
    train_gate_stage, train_gated_ncl, train_me, train_mnce, train_ncl, EnsembleModel, EnsembleRecord,
    NetworkRecord, TrainConfig, Variant,
};
