use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{generate_synthetic, load_csv, manifest_path, to_csv_string, write_csv, ClassLabel, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{search_windows, sweep_grid, FoldFeatures, WindowSearch};
use crate::features::{assemble, window_slices};
use crate::pca::PcaModel;
use crate::pipeline::config::{DataSource, RunConfig};
use crate::pipeline::results::{Cell, PairingRun, RunResults, WindowCells, RESULTS_SCHEMA_VERSION};
use crate::seed::fnv1a;

pub const DATASET_FILE: &str = "dataset.csv";
pub const RESULTS_FILE: &str = "results.json";
pub const RESULTS_CSV_FILE: &str = "results.csv";
pub const TABLE_FILE: &str = "table.txt";
pub const TABLE_CSV_FILE: &str = "table.csv";
pub const PCA_FILE: &str = "pca.bin";
pub const FEATURES_FILE: &str = "features.csv";

fn hex_id(text: &str) -> String {
    format!("{:016x}", fnv1a(text.as_bytes()))
}

fn create_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e).in_stage("write"))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e).in_stage("write"))
}

/// The configured dataset together with its CSV text.
pub fn load_dataset(cfg: &RunConfig) -> Result<(Dataset, String)> {
    let loaded = match &cfg.data {
        DataSource::Synthetic => generate_synthetic(&cfg.synthetic_config()).map(|ds| {
            let text = to_csv_string(&ds);
            (ds, text)
        }),
        DataSource::Csv(path) => load_csv(path).and_then(|ds| {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok((ds, text))
        }),
    };
    loaded.map_err(|e| e.in_stage("data"))
}

/// The datasets to compare, one per configured pairing.
pub fn pairing_datasets(cfg: &RunConfig, dataset: &Dataset) -> Result<Vec<(String, Dataset)>> {
    if cfg.pairings.is_empty() {
        let name = dataset
            .pairing()
            .map_or_else(|| dataset.group_tags().join("/"), ToString::to_string);
        return Ok(vec![(name, dataset.clone())]);
    }
    cfg.pairings
        .iter()
        .map(|p| {
            dataset
                .split_by_pairing(&p.wild, &p.mutated)
                .map(|ds| (p.to_string(), ds))
                .map_err(|e| e.in_stage("data"))
        })
        .collect()
}

/// Number of components PCA can deliver for this dataset: at most `d`, and
/// fewer than the pooled frames of the smallest training fold.
pub fn effective_components(requested: usize, dataset: &Dataset, folds: usize) -> usize {
    let n = dataset.len();
    let largest_fold = n.div_ceil(folds);
    let train_frames = (n - largest_fold.min(n)) * dataset.frames();
    requested.min(dataset.dim()).min(train_frames.saturating_sub(1)).max(1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerateSummary {
    pub csv: PathBuf,
    pub manifest: PathBuf,
    pub samples: usize,
    pub wild: usize,
    pub mutated: usize,
    pub frames: usize,
    pub dim: usize,
    pub rows: usize,
}

impl std::fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "wrote {} ({} samples: {} wild, {} mutated; T={}, d={}; {} rows)",
            self.csv.display(),
            self.samples,
            self.wild,
            self.mutated,
            self.frames,
            self.dim,
            self.rows
        )
    }
}

/// Write the synthetic dataset of `cfg` to `<out>/dataset.csv` and its manifest.
pub fn cmd_generate(cfg: &RunConfig) -> Result<GenerateSummary> {
    let ds = generate_synthetic(&cfg.synthetic_config()).map_err(|e| e.in_stage("data"))?;
    create_out(&cfg.out)?;
    let csv = cfg.out.join(DATASET_FILE);
    write_csv(&ds, &csv).map_err(|e| e.in_stage("write"))?;
    let wild = ds.labels().iter().filter(|l| **l == ClassLabel::Wild).count();
    Ok(GenerateSummary {
        manifest: manifest_path(&csv),
        csv,
        samples: ds.len(),
        wild,
        mutated: ds.len() - wild,
        frames: ds.frames(),
        dim: ds.dim(),
        rows: ds.len() * ds.frames(),
    })
}

/// Full window search over one pairing, with λ sweeps folded into the cells.
pub fn run_pairing(cfg: &RunConfig, name: String, dataset: &Dataset) -> Result<PairingRun> {
    let k = effective_components(cfg.pca_components, dataset, cfg.folds);
    let opts = cfg.search_options(k);
    let labels = dataset.labels();
    let windows = window_slices(dataset.frames(), cfg.window).map_err(|e| e.in_stage("features"))?;

    // Swept classifiers expand into one spec per grid point; `groups` maps
    // each configured classifier to its range of expanded specs.
    let mut expanded = Vec::new();
    let mut groups = Vec::new();
    for spec in cfg.classifier_specs() {
        let start = expanded.len();
        if cfg.lambda_sweep && spec.kind.uses_lambda() {
            expanded.extend(spec.train.lambda_grid.iter().map(|&l| spec.with_lambda(l)));
        } else {
            expanded.push(spec);
        }
        groups.push(start..expanded.len());
    }

    let features = FoldFeatures::build(dataset, &opts)?;
    let search = search_windows(&features, &labels, &expanded, &windows, &opts).map_err(|e| e.in_stage("search"))?;
    let cells = collect_cells(&search, &expanded, &groups, cfg)?;
    let wild = labels.iter().filter(|l| **l == ClassLabel::Wild).count();
    PairingRun::from_cells(
        name,
        (wild, labels.len() - wild),
        k,
        cfg.classifiers.iter().map(|c| c.name().to_string()).collect(),
        cells,
    )
}

fn collect_cells(
    search: &WindowSearch,
    expanded: &[crate::evaluation::ClassifierSpec],
    groups: &[std::ops::Range<usize>],
    cfg: &RunConfig,
) -> Result<Vec<WindowCells>> {
    search
        .windows
        .iter()
        .map(|w| {
            let cells = groups
                .iter()
                .map(|g| {
                    let spec = &expanded[g.start];
                    let lambda = spec.kind.uses_lambda().then_some(spec.lambda);
                    if g.len() == 1 && !(cfg.lambda_sweep && spec.kind.uses_lambda()) {
                        return Ok(Cell {
                            error: w.errors[g.start],
                            fold_errors: w.fold_errors[g.start].clone(),
                            lambda,
                            sweep_errors: Vec::new(),
                        });
                    }
                    let grid: Vec<f64> = expanded[g.clone()].iter().map(|s| s.lambda).collect();
                    let sweep = sweep_grid(&grid, |l| {
                        let i = grid.iter().position(|&x| x == l).expect("grid value");
                        Ok(w.errors[g.start + i])
                    })?;
                    let best = g.start + grid.iter().position(|&x| x == sweep.best_lambda).expect("grid value");
                    Ok(Cell {
                        error: sweep.best_error,
                        fold_errors: w.fold_errors[best].clone(),
                        lambda: Some(sweep.best_lambda),
                        sweep_errors: sweep.errors,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(WindowCells { window: w.window, cells })
        })
        .collect()
}

/// Run every pairing and collect the results, without touching the disk.
pub fn execute(cfg: &RunConfig) -> Result<RunResults> {
    cfg.validate().map_err(|e| e.in_stage("config"))?;
    let (dataset, text) = load_dataset(cfg)?;
    let runs = pairing_datasets(cfg, &dataset)?
        .into_iter()
        .map(|(name, ds)| run_pairing(cfg, name, &ds))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResults {
        schema_version: RESULTS_SCHEMA_VERSION,
        run_id: hex_id(&cfg.to_text()),
        dataset_id: hex_id(&text),
        config: cfg.entries().into_iter().collect(),
        runs,
    })
}

/// Execute the run and write the results file, the long-format CSV and the
/// table (text and CSV) into `cfg.out`.
pub fn cmd_run(cfg: &RunConfig) -> Result<RunResults> {
    let results = execute(cfg)?;
    create_out(&cfg.out)?;
    write_file(&cfg.out.join(RESULTS_FILE), &results.to_json())?;
    write_file(&cfg.out.join(RESULTS_CSV_FILE), &results.to_csv_string())?;
    write_file(&cfg.out.join(TABLE_FILE), &results.render_table())?;
    write_file(&cfg.out.join(TABLE_CSV_FILE), &results.render_table_csv())?;
    Ok(results)
}

/// Rendered table of a results file: `(text, csv)`.
pub fn cmd_report(path: impl AsRef<Path>) -> Result<(String, String)> {
    let results = RunResults::load(path).map_err(|e| e.in_stage("report"))?;
    Ok((results.render_table(), results.render_table_csv()))
}

/// Fit PCA on every frame of the dataset and save it to `<out>/pca.bin`.
///
/// A debugging aid: the cross-validated run fits PCA per fold instead.
pub fn cmd_pca_fit(cfg: &RunConfig) -> Result<(PcaModel, PathBuf)> {
    let (dataset, _) = load_dataset(cfg)?;
    let pooled: Vec<Vec<f64>> = dataset.samples().iter().flat_map(|s| s.frames.iter().cloned()).collect();
    let k = cfg.pca_components.min(dataset.dim()).min(pooled.len().saturating_sub(1)).max(1);
    let pca = PcaModel::fit(&pooled, k).map_err(|e| e.in_stage("pca"))?;
    create_out(&cfg.out)?;
    let path = cfg.out.join(PCA_FILE);
    pca.save(&path).map_err(|e| e.in_stage("write"))?;
    Ok((pca, path))
}

/// Fit PCA on every frame, assemble the feature rows and write them to
/// `<out>/features.csv`.
pub fn cmd_features_export(cfg: &RunConfig) -> Result<PathBuf> {
    let (pca, _) = cmd_pca_fit(cfg)?;
    let (dataset, _) = load_dataset(cfg)?;
    let scores = dataset
        .samples()
        .iter()
        .map(|s| pca.transform(&s.frames))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage("pca"))?;
    let fm = assemble(&scores, cfg.include_velocity, cfg.include_acceleration, cfg.velocity)
        .map_err(|e| e.in_stage("features"))?;
    let path = cfg.out.join(FEATURES_FILE);
    fm.write_csv(&path).map_err(|e| e.in_stage("write"))?;
    Ok(path)
}
