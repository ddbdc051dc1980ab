//! End-to-end runs: configuration, the sliding-window comparison over every
//! pairing, and the results file with its rendered table.

mod config;
mod results;
mod run;

pub use config::{DataSource, RunConfig, SvmSettings};
pub use results::{Cell, ClassifierBest, PairingRun, RunResults, WindowCells, RESULTS_SCHEMA_VERSION};
pub use run::{
    cmd_features_export, cmd_generate, cmd_pca_fit, cmd_report, cmd_run, effective_components, execute,
    load_dataset, pairing_datasets, run_pairing, GenerateSummary, DATASET_FILE, FEATURES_FILE, PCA_FILE,
    RESULTS_CSV_FILE, RESULTS_FILE, TABLE_CSV_FILE, TABLE_FILE,
};
