//! Run configuration: a `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; a missing key keeps the default listed by [`RunConfig::default`].
//! List values are comma-separated and pairings are written `wild:mutated`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::dataset::{NoiseModel, Pairing, SyntheticConfig};
use crate::ensembles::TrainConfig;
use crate::error::{Error, Result};
use crate::evaluation::{ClassifierKind, ClassifierSpec, SearchOptions};
use crate::features::{VelocityConvention, WindowSpec};
use crate::pca::DEFAULT_COMPONENTS;
use crate::svm::SmoParams;

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmSettings {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub sigma: Option<f64>,
    pub sigmoid_a: Option<f64>,
    pub sigmoid_b: f64,
}

impl Default for SvmSettings {
    fn default() -> Self {
        let smo = SmoParams::default();
        SvmSettings {
            c: smo.c,
            tol: smo.tol,
            max_passes: smo.max_passes,
            sigma: None,
            sigmoid_a: None,
            sigmoid_b: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: DataSource,
    /// Synthetic generator settings; `synthetic_seed = None` follows `seed`.
    pub synthetic: SyntheticConfig,
    pub synthetic_seed: Option<u64>,
    /// Empty means: take the pairing recorded with the dataset.
    pub pairings: Vec<Pairing>,
    pub pca_components: usize,
    pub include_velocity: bool,
    pub include_acceleration: bool,
    pub velocity: VelocityConvention,
    pub window: WindowSpec,
    pub folds: usize,
    pub seed: u64,
    pub jobs: usize,
    pub classifiers: Vec<ClassifierKind>,
    pub svm: SvmSettings,
    pub ensemble: TrainConfig,
    pub lambda: f64,
    pub lambda_sweep: bool,
    /// `None` keeps each classifier's own default.
    pub standardize: Option<bool>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSource::Synthetic,
            synthetic: SyntheticConfig::default(),
            synthetic_seed: None,
            pairings: Vec::new(),
            pca_components: DEFAULT_COMPONENTS,
            include_velocity: true,
            include_acceleration: true,
            velocity: VelocityConvention::Difference,
            window: WindowSpec::default(),
            folds: 5,
            seed: 0,
            jobs: 0,
            classifiers: ClassifierKind::ALL.to_vec(),
            svm: SvmSettings::default(),
            ensemble: TrainConfig::default(),
            lambda: 0.5,
            lambda_sweep: true,
            standardize: None,
            out: PathBuf::from("results"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true or false, got `{value}`"))),
    }
}

/// `auto` maps to `None`.
fn parse_auto<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_num(key, value).map(Some)
    }
}

fn parse_list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn show_auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "given more than once"));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; a relative `data` path is taken relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let DataSource::Csv(p) = &cfg.data {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.data = DataSource::Csv(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let syn = &mut self.synthetic;
        match key {
            "data" => {
                self.data = if value.eq_ignore_ascii_case("synthetic") {
                    DataSource::Synthetic
                } else {
                    DataSource::Csv(PathBuf::from(value))
                }
            }
            "synthetic.n_per_class" => syn.n_per_class = parse_num(key, value)?,
            "synthetic.frames" => syn.frames = parse_num(key, value)?,
            "synthetic.dim" => syn.dim = parse_num(key, value)?,
            "synthetic.base_velocity" => syn.base_velocity = parse_num(key, value)?,
            "synthetic.velocity_gap" => syn.velocity_gap = parse_num(key, value)?,
            "synthetic.acceleration_gap" => syn.acceleration_gap = parse_num(key, value)?,
            "synthetic.noise_sd" => syn.noise_sd = parse_num(key, value)?,
            "synthetic.noise_model" => {
                syn.noise_model = match value {
                    "independent" => NoiseModel::Independent,
                    "random_walk" => NoiseModel::RandomWalk,
                    _ => return Err(Error::config(key, format!("expected independent or random_walk, got `{value}`"))),
                }
            }
            "synthetic.offset_sd" => syn.offset_sd = parse_num(key, value)?,
            "synthetic.signal_frames" => {
                syn.signal_frames = if value.eq_ignore_ascii_case("all") {
                    None
                } else {
                    let (a, b) = value
                        .split_once('-')
                        .ok_or_else(|| Error::config(key, format!("expected `start-end` or `all`, got `{value}`")))?;
                    Some((parse_num(key, a.trim())?, parse_num(key, b.trim())?))
                }
            }
            "synthetic.background_sd" => syn.background_sd = parse_num(key, value)?,
            "synthetic.wild_tag" => syn.wild_tag = value.to_string(),
            "synthetic.mutated_tag" => syn.mutated_tag = value.to_string(),
            "synthetic.seed" => self.synthetic_seed = parse_auto(key, value)?,
            "pairings" => {
                self.pairings = parse_list(value)
                    .into_iter()
                    .map(|p| {
                        let (w, m) = p
                            .split_once(':')
                            .ok_or_else(|| Error::config(key, format!("expected `wild:mutated`, got `{p}`")))?;
                        Ok(Pairing::new(w.trim(), m.trim()))
                    })
                    .collect::<Result<_>>()?
            }
            "pca_components" => self.pca_components = parse_num(key, value)?,
            "include_velocity" => self.include_velocity = parse_bool(key, value)?,
            "include_acceleration" => self.include_acceleration = parse_bool(key, value)?,
            "velocity" => {
                self.velocity = match value {
                    "difference" => VelocityConvention::Difference,
                    "sum" => VelocityConvention::PaperLiteralSum,
                    _ => return Err(Error::config(key, format!("expected difference or sum, got `{value}`"))),
                }
            }
            "window_length" => self.window.length = parse_num(key, value)?,
            "window_stride" => self.window.stride = parse_num(key, value)?,
            "folds" => self.folds = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "jobs" => self.jobs = parse_num(key, value)?,
            "classifiers" => {
                self.classifiers = parse_list(value)
                    .into_iter()
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "svm.c" => self.svm.c = parse_num(key, value)?,
            "svm.tol" => self.svm.tol = parse_num(key, value)?,
            "svm.max_passes" => self.svm.max_passes = parse_num(key, value)?,
            "svm.sigma" => self.svm.sigma = parse_auto(key, value)?,
            "svm.sigmoid_a" => self.svm.sigmoid_a = parse_auto(key, value)?,
            "svm.sigmoid_b" => self.svm.sigmoid_b = parse_num(key, value)?,
            "ensemble.epochs" => self.ensemble.epochs = parse_num(key, value)?,
            "ensemble.hidden" => self.ensemble.hidden = parse_num(key, value)?,
            "ensemble.experts" => self.ensemble.experts = parse_num(key, value)?,
            "ensemble.eta_expert" => self.ensemble.eta_expert = parse_num(key, value)?,
            "ensemble.eta_gate" => self.ensemble.eta_gate = parse_num(key, value)?,
            "ensemble.lambda" => self.lambda = parse_num(key, value)?,
            "ensemble.lambda_grid" => {
                self.ensemble.lambda_grid = parse_list(value)
                    .into_iter()
                    .map(|v| parse_num(key, v))
                    .collect::<Result<_>>()?
            }
            "ensemble.lambda_sweep" => self.lambda_sweep = parse_bool(key, value)?,
            "standardize" => {
                self.standardize = if value.eq_ignore_ascii_case("auto") {
                    None
                } else {
                    Some(parse_bool(key, value)?)
                }
            }
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.data == DataSource::Synthetic {
            self.synthetic_config().validate()?;
        }
        if self.pca_components == 0 {
            return Err(Error::config("pca_components", "must be at least 1"));
        }
        if self.include_acceleration && !self.include_velocity {
            return Err(Error::config("include_acceleration", "requires include_velocity"));
        }
        if self.window.length == 0 {
            return Err(Error::config("window_length", "must be at least 1"));
        }
        if self.window.stride == 0 {
            return Err(Error::config("window_stride", "must be at least 1"));
        }
        if self.folds < 2 {
            return Err(Error::config("folds", "must be at least 2"));
        }
        if self.classifiers.is_empty() {
            return Err(Error::config("classifiers", "must name at least one classifier"));
        }
        for spec in self.classifier_specs() {
            spec.validate()?;
        }
        Ok(())
    }

    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            seed: self.synthetic_seed.unwrap_or(self.seed),
            ..self.synthetic.clone()
        }
    }

    pub fn classifier_specs(&self) -> Vec<ClassifierSpec> {
        self.classifiers
            .iter()
            .map(|&kind| {
                let base = ClassifierSpec::new(kind);
                ClassifierSpec {
                    c: self.svm.c,
                    tol: self.svm.tol,
                    max_passes: self.svm.max_passes,
                    sigma: self.svm.sigma,
                    sigmoid_a: self.svm.sigmoid_a,
                    sigmoid_b: self.svm.sigmoid_b,
                    lambda: if kind == ClassifierKind::Me { 0.0 } else { self.lambda },
                    train: self.ensemble.clone(),
                    standardize: self.standardize.unwrap_or(base.standardize),
                    ..base
                }
            })
            .collect()
    }

    pub fn search_options(&self, pca_components: usize) -> SearchOptions {
        SearchOptions {
            folds: self.folds,
            seed: self.seed,
            pca_components,
            include_velocity: self.include_velocity,
            include_acceleration: self.include_acceleration,
            convention: self.velocity,
            jobs: self.jobs,
        }
    }

    /// Canonical `(key, value)` listing of every setting except `jobs` and
    /// `out`, which do not affect results.
    pub fn entries(&self) -> Vec<(String, String)> {
        let syn = self.synthetic_config();
        let mut e: Vec<(&str, String)> = vec![(
            "data",
            match &self.data {
                DataSource::Csv(p) => p.display().to_string(),
                DataSource::Synthetic => "synthetic".into(),
            },
        )];
        if self.data == DataSource::Synthetic {
            e.extend([
                ("synthetic.n_per_class", syn.n_per_class.to_string()),
                ("synthetic.frames", syn.frames.to_string()),
                ("synthetic.dim", syn.dim.to_string()),
                ("synthetic.base_velocity", syn.base_velocity.to_string()),
                ("synthetic.velocity_gap", syn.velocity_gap.to_string()),
                ("synthetic.acceleration_gap", syn.acceleration_gap.to_string()),
                ("synthetic.noise_sd", syn.noise_sd.to_string()),
                (
                    "synthetic.noise_model",
                    match syn.noise_model {
                        NoiseModel::Independent => "independent".into(),
                        NoiseModel::RandomWalk => "random_walk".into(),
                    },
                ),
                ("synthetic.offset_sd", syn.offset_sd.to_string()),
                (
                    "synthetic.signal_frames",
                    syn.signal_frames.map_or_else(|| "all".into(), |(a, b)| format!("{a}-{b}")),
                ),
                ("synthetic.background_sd", syn.background_sd.to_string()),
                ("synthetic.wild_tag", syn.wild_tag.clone()),
                ("synthetic.mutated_tag", syn.mutated_tag.clone()),
                ("synthetic.seed", syn.seed.to_string()),
            ]);
        }
        e.extend([
            (
                "pairings",
                self.pairings.iter().map(|p| format!("{}:{}", p.wild, p.mutated)).collect::<Vec<_>>().join(", "),
            ),
            ("pca_components", self.pca_components.to_string()),
            ("include_velocity", self.include_velocity.to_string()),
            ("include_acceleration", self.include_acceleration.to_string()),
            (
                "velocity",
                match self.velocity {
                    VelocityConvention::Difference => "difference".into(),
                    VelocityConvention::PaperLiteralSum => "sum".into(),
                },
            ),
            ("window_length", self.window.length.to_string()),
            ("window_stride", self.window.stride.to_string()),
            ("folds", self.folds.to_string()),
            ("seed", self.seed.to_string()),
            ("classifiers", join(&self.classifiers)),
            ("svm.c", self.svm.c.to_string()),
            ("svm.tol", self.svm.tol.to_string()),
            ("svm.max_passes", self.svm.max_passes.to_string()),
            ("svm.sigma", show_auto(&self.svm.sigma)),
            ("svm.sigmoid_a", show_auto(&self.svm.sigmoid_a)),
            ("svm.sigmoid_b", self.svm.sigmoid_b.to_string()),
            ("ensemble.epochs", self.ensemble.epochs.to_string()),
            ("ensemble.hidden", self.ensemble.hidden.to_string()),
            ("ensemble.experts", self.ensemble.experts.to_string()),
            ("ensemble.eta_expert", self.ensemble.eta_expert.to_string()),
            ("ensemble.eta_gate", self.ensemble.eta_gate.to_string()),
            ("ensemble.lambda", self.lambda.to_string()),
            ("ensemble.lambda_grid", join(&self.ensemble.lambda_grid)),
            ("ensemble.lambda_sweep", self.lambda_sweep.to_string()),
            ("standardize", show_auto(&self.standardize)),
        ]);
        e.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
