//! Time-series classification toolkit: PCA features with velocity and
//! acceleration blocks, sliding-window selection, kernel SVMs and neural
//! network ensembles, evaluated by stratified cross-validation.

pub mod dataset;
pub mod ensembles;
pub mod evaluation;
pub mod error;
pub mod features;
pub mod pca;
pub mod pipeline;
pub mod seed;
pub mod svm;

pub use error::{Error, ErrorKind, Result};
