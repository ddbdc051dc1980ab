//! Cross-validation, λ sweeps and the sliding-window search.

mod classifier;
mod cv;
mod folds;

pub use classifier::{ClassifierKind, ClassifierSpec, FittedClassifier, Model, Standardizer};
pub use cv::{
    classifier_seed, cross_validate, cross_validate_folds, cross_validate_with, fold_features_for, lambda_sweep,
    search_windows, sweep_grid, window_search, BestWindow, CvResult, FoldFeatures, LambdaSweep, SearchOptions,
    WindowResult, WindowSearch,
};
pub use folds::{error_rate, format_percent, kfold_split, training_indices};
