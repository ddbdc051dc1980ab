use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassLabel, Dataset};
use crate::error::{Error, Result};
use crate::features::{assemble, slice_features, window_slices, FeatureMatrix, VelocityConvention, Window, WindowSpec};
use crate::pca::PcaModel;
use crate::seed::derive_seed;

use super::classifier::ClassifierSpec;
use super::folds::{error_rate, kfold_split, training_indices};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub mean_error: f64,
    pub fold_errors: Vec<f64>,
    /// Held-out prediction for every sample.
    pub predictions: Vec<ClassLabel>,
}

/// Cross-validation over fixed folds with an arbitrary fit-and-predict
/// step. `fit_predict(fold, train, test)` returns predictions for `test`.
pub fn cross_validate_with<F>(labels: &[ClassLabel], folds: &[Vec<usize>], mut fit_predict: F) -> Result<CvResult>
where
    F: FnMut(usize, &[usize], &[usize]) -> Result<Vec<ClassLabel>>,
{
    let n = labels.len();
    let mut predictions = vec![ClassLabel::Wild; n];
    let mut fold_errors = Vec::with_capacity(folds.len());
    for (f, test) in folds.iter().enumerate() {
        let train = training_indices(n, test);
        let pred = fit_predict(f, &train, test).map_err(|e| Error::Fold {
            fold: f,
            source: Box::new(e),
        })?;
        if pred.len() != test.len() {
            return Err(Error::DimensionMismatch {
                expected: test.len(),
                found: pred.len(),
            });
        }
        let truth: Vec<ClassLabel> = test.iter().map(|&i| labels[i]).collect();
        fold_errors.push(error_rate(&pred, &truth)?);
        for (&i, p) in test.iter().zip(pred) {
            predictions[i] = p;
        }
    }
    if fold_errors.is_empty() {
        return Err(Error::InvalidArgument("no folds".into()));
    }
    let mean_error = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
    Ok(CvResult {
        mean_error,
        fold_errors,
        predictions,
    })
}

/// Cross-validate `spec` on fixed feature rows and folds. The model of fold
/// `f` is seeded with `(seed, "fold", f)`.
pub fn cross_validate_folds(
    spec: &ClassifierSpec,
    rows: &[Vec<f64>],
    labels: &[ClassLabel],
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<CvResult> {
    if rows.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: rows.len(),
        });
    }
    cross_validate_with(labels, folds, |f, train, test| {
        let x: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
        let y: Vec<ClassLabel> = train.iter().map(|&i| labels[i]).collect();
        let model = spec.fit(&x, &y, derive_seed(seed, "fold", f as u64))?;
        test.iter().map(|&i| model.predict(&rows[i])).collect()
    })
}

/// Stratified `k`-fold cross-validation of `spec` on a fixed feature matrix.
pub fn cross_validate(
    spec: &ClassifierSpec,
    features: &FeatureMatrix,
    labels: &[ClassLabel],
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    let folds = kfold_split(labels, k, derive_seed(seed, "folds", 0))?;
    cross_validate_folds(spec, features.rows(), labels, &folds, seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaSweep {
    pub grid: Vec<f64>,
    pub errors: Vec<f64>,
    pub best_lambda: f64,
    pub best_error: f64,
}

/// Evaluate every grid point and keep the minimizer; ties go to the
/// smaller λ.
pub fn sweep_grid<F>(grid: &[f64], mut evaluate: F) -> Result<LambdaSweep>
where
    F: FnMut(f64) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty λ grid".into()));
    }
    let errors = grid.iter().map(|&l| evaluate(l)).collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for i in 1..grid.len() {
        if errors[i] < errors[best] || (errors[i] == errors[best] && grid[i] < grid[best]) {
            best = i;
        }
    }
    Ok(LambdaSweep {
        grid: grid.to_vec(),
        errors: errors.clone(),
        best_lambda: grid[best],
        best_error: errors[best],
    })
}

/// λ sweep over `spec.train.lambda_grid` by cross-validation.
pub fn lambda_sweep(
    spec: &ClassifierSpec,
    features: &FeatureMatrix,
    labels: &[ClassLabel],
    k: usize,
    seed: u64,
) -> Result<LambdaSweep> {
    let folds = kfold_split(labels, k, derive_seed(seed, "folds", 0))?;
    sweep_grid(&spec.train.lambda_grid, |l| {
        cross_validate_folds(&spec.with_lambda(l), features.rows(), labels, &folds, seed).map(|r| r.mean_error)
    })
}

/// Feature extraction settings shared by all folds of a search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub folds: usize,
    pub seed: u64,
    pub pca_components: usize,
    pub include_velocity: bool,
    pub include_acceleration: bool,
    pub convention: VelocityConvention,
    /// Worker threads; 0 lets the thread pool choose.
    pub jobs: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            folds: 5,
            seed: 0,
            pca_components: crate::pca::DEFAULT_COMPONENTS,
            include_velocity: true,
            include_acceleration: true,
            convention: VelocityConvention::Difference,
            jobs: 0,
        }
    }
}

/// Per-fold PCA models and full-length feature matrices.
///
/// Fold `f`'s PCA is fit on the pooled frames of the samples outside fold
/// `f`; every sample is then projected with that model, so the held-out
/// rows never influence the features of their own fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldFeatures {
    pub folds: Vec<Vec<usize>>,
    pub pca: Vec<PcaModel>,
    pub matrices: Vec<FeatureMatrix>,
}

pub fn fold_features_for(dataset: &Dataset, train: &[usize], opts: &SearchOptions) -> Result<(PcaModel, FeatureMatrix)> {
    let samples = dataset.samples();
    let pooled: Vec<Vec<f64>> = train
        .iter()
        .flat_map(|&i| samples[i].frames.iter().cloned())
        .collect();
    let pca = PcaModel::fit(&pooled, opts.pca_components).map_err(|e| e.in_stage("pca"))?;
    let scores = samples
        .iter()
        .map(|s| pca.transform(&s.frames))
        .collect::<Result<Vec<_>>>()?;
    let fm = assemble(&scores, opts.include_velocity, opts.include_acceleration, opts.convention)
        .map_err(|e| e.in_stage("features"))?;
    Ok((pca, fm))
}

impl FoldFeatures {
    pub fn build(dataset: &Dataset, opts: &SearchOptions) -> Result<Self> {
        let labels = dataset.labels();
        let folds = kfold_split(&labels, opts.folds, derive_seed(opts.seed, "folds", 0))?;
        let built = folds
            .iter()
            .enumerate()
            .map(|(f, test)| {
                fold_features_for(dataset, &training_indices(labels.len(), test), opts).map_err(|e| Error::Fold {
                    fold: f,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (pca, matrices) = built.into_iter().unzip();
        Ok(FoldFeatures { folds, pca, matrices })
    }

    pub fn frames(&self) -> usize {
        self.matrices[0].layout().frames
    }

    /// Cross-validate `spec` on window `w` of every fold's features.
    pub fn evaluate(&self, spec: &ClassifierSpec, labels: &[ClassLabel], w: Window, seed: u64) -> Result<CvResult> {
        let sliced = self
            .matrices
            .iter()
            .map(|m| slice_features(m, w))
            .collect::<Result<Vec<_>>>()?;
        cross_validate_with(labels, &self.folds, |f, train, test| {
            let rows = sliced[f].rows();
            let x: Vec<Vec<f64>> = train.iter().map(|&i| rows[i].clone()).collect();
            let y: Vec<ClassLabel> = train.iter().map(|&i| labels[i]).collect();
            let model = spec.fit(&x, &y, derive_seed(seed, "fold", f as u64))?;
            test.iter().map(|&i| model.predict(&rows[i])).collect()
        })
        .map_err(|e| Error::Window {
            start: w.start,
            end: w.end,
            source: Box::new(e),
        })
    }
}

/// Seed of a classifier within a run: derived from its name so that adding
/// or reordering classifiers leaves the others unchanged.
pub fn classifier_seed(seed: u64, spec: &ClassifierSpec) -> u64 {
    derive_seed(seed, spec.kind.name(), 0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowResult {
    pub window: Window,
    /// Mean CV error per classifier, in spec order.
    pub errors: Vec<f64>,
    pub fold_errors: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestWindow {
    pub classifier: String,
    pub window: Window,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSearch {
    pub classifiers: Vec<String>,
    pub windows: Vec<WindowResult>,
    pub best: Vec<BestWindow>,
}

impl WindowSearch {
    /// Window minimizing `score(errors)`; ties go to the earliest window.
    pub fn argmin_by<F: Fn(&[f64]) -> f64>(&self, score: F) -> Option<&WindowResult> {
        let mut best: Option<(&WindowResult, f64)> = None;
        for w in &self.windows {
            let s = score(&w.errors);
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((w, s));
            }
        }
        best.map(|(w, _)| w)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("start,end");
        for c in &self.classifiers {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for w in &self.windows {
            out.push_str(&format!("{},{}", w.window.start, w.window.end));
            for e in &w.errors {
                out.push_str(&format!(",{e}"));
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn run_parallel<T, F>(jobs: usize, count: usize, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Result<T>> = pool.install(|| (0..count).into_par_iter().map(&work).collect());
    results.into_iter().collect()
}

/// Exhaustive sliding-window search: every window of `wspec` is evaluated
/// for every classifier on the same folds.
pub fn window_search(
    dataset: &Dataset,
    specs: &[ClassifierSpec],
    wspec: WindowSpec,
    opts: &SearchOptions,
) -> Result<WindowSearch> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("no classifiers to evaluate".into()));
    }
    for s in specs {
        s.validate()?;
    }
    let windows = window_slices(dataset.frames(), wspec)?;
    let features = FoldFeatures::build(dataset, opts)?;
    search_windows(&features, &dataset.labels(), specs, &windows, opts)
}

pub fn search_windows(
    features: &FoldFeatures,
    labels: &[ClassLabel],
    specs: &[ClassifierSpec],
    windows: &[Window],
    opts: &SearchOptions,
) -> Result<WindowSearch> {
    let m = specs.len();
    let cells = run_parallel(opts.jobs, windows.len() * m, |u| {
        let (w, s) = (u / m, u % m);
        features.evaluate(&specs[s], labels, windows[w], classifier_seed(opts.seed, &specs[s]))
    })?;
    let results: Vec<WindowResult> = windows
        .iter()
        .enumerate()
        .map(|(w, &window)| {
            let row = &cells[w * m..(w + 1) * m];
            WindowResult {
                window,
                errors: row.iter().map(|r| r.mean_error).collect(),
                fold_errors: row.iter().map(|r| r.fold_errors.clone()).collect(),
            }
        })
        .collect();
    let mut search = WindowSearch {
        classifiers: specs.iter().map(|s| s.kind.name().to_string()).collect(),
        windows: results,
        best: Vec::new(),
    };
    search.best = (0..m)
        .map(|s| {
            let w = search.argmin_by(|e| e[s]).expect("at least one window");
            BestWindow {
                classifier: search.classifiers[s].clone(),
                window: w.window,
                error: w.errors[s],
            }
        })
        .collect();
    Ok(search)
}
