//! Kernel support vector machine.

mod kernel;
mod smo;

pub use kernel::{default_sigmoid_a, gram_matrix, kernel_eval, median_pairwise_distance, KernelSpec};
pub use smo::{
    dual_objective, label_from_decision, train_smo, SmoParams, SupportVector, SvmModel, SvmRecord,
};
