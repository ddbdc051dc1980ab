use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::ensembles::{self, EnsembleModel, TrainConfig, Variant};
use crate::error::{Error, Result};
use crate::svm::{default_sigmoid_a, median_pairwise_distance, train_smo, KernelSpec, SmoParams, SvmModel};

/// The classifier families compared in the report, in column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    SigmoidSvm,
    GaussianSvm,
    LinearSvm,
    Mnce,
    Me,
    GatedNcl,
    Ncl,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 7] = [
        ClassifierKind::SigmoidSvm,
        ClassifierKind::GaussianSvm,
        ClassifierKind::LinearSvm,
        ClassifierKind::Mnce,
        ClassifierKind::Me,
        ClassifierKind::GatedNcl,
        ClassifierKind::Ncl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::SigmoidSvm => "Sigmoid-SVM",
            ClassifierKind::GaussianSvm => "Gaussian-SVM",
            ClassifierKind::LinearSvm => "Linear-SVM",
            ClassifierKind::Mnce => "MNCE",
            ClassifierKind::Me => "ME",
            ClassifierKind::GatedNcl => "Gated-NCL",
            ClassifierKind::Ncl => "NCL",
        }
    }

    pub fn is_svm(self) -> bool {
        matches!(
            self,
            ClassifierKind::SigmoidSvm | ClassifierKind::GaussianSvm | ClassifierKind::LinearSvm
        )
    }

    /// Whether the kind has a penalty coefficient worth sweeping.
    pub fn uses_lambda(self) -> bool {
        matches!(self, ClassifierKind::Mnce | ClassifierKind::GatedNcl | ClassifierKind::Ncl)
    }

    fn variant(self) -> Option<Variant> {
        match self {
            ClassifierKind::Mnce => Some(Variant::Mnce),
            ClassifierKind::Me => Some(Variant::Me),
            ClassifierKind::GatedNcl => Some(Variant::GatedNcl),
            ClassifierKind::Ncl => Some(Variant::Ncl),
            _ => None,
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    /// Accepts the display names and their snake-case forms, ignoring case.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .trim()
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        ClassifierKind::ALL
            .into_iter()
            .find(|k| {
                let name: String = k.name().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
                name.to_ascii_lowercase() == key
            })
            .ok_or_else(|| Error::config("classifiers", format!("unknown classifier `{s}`")))
    }
}

/// A classifier family with its hyperparameters.
///
/// `sigma` and `sigmoid_a` default to the median pairwise training distance
/// and `1/d`. With `standardize` set, every feature is centered and scaled
/// by training-fold statistics before fitting; it is on by default for the
/// kinds built from saturating units (sigmoid kernel, sigmoid networks).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub sigma: Option<f64>,
    pub sigmoid_a: Option<f64>,
    pub sigmoid_b: f64,
    pub lambda: f64,
    pub train: TrainConfig,
    pub standardize: bool,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        let smo = SmoParams::default();
        ClassifierSpec {
            kind,
            c: smo.c,
            tol: smo.tol,
            max_passes: smo.max_passes,
            sigma: None,
            sigmoid_a: None,
            sigmoid_b: 0.0,
            lambda: if kind == ClassifierKind::Me { 0.0 } else { 0.5 },
            train: TrainConfig::default(),
            standardize: !matches!(kind, ClassifierKind::LinearSvm | ClassifierKind::GaussianSvm),
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        ClassifierSpec {
            lambda,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind.is_svm() {
            if !(self.c > 0.0 && self.c.is_finite()) {
                return Err(Error::config("c", format!("must be positive, got {}", self.c)));
            }
            if !(self.tol > 0.0) {
                return Err(Error::config("tol", "must be positive"));
            }
            if let Some(s) = self.sigma {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(Error::config("sigma", format!("must be positive, got {s}")));
                }
            }
            if let Some(a) = self.sigmoid_a {
                if !a.is_finite() {
                    return Err(Error::config("sigmoid_a", "must be finite"));
                }
            }
            if !self.sigmoid_b.is_finite() {
                return Err(Error::config("sigmoid_b", "must be finite"));
            }
            Ok(())
        } else {
            self.train.validate()?;
            if !(0.0..=1.0).contains(&self.lambda) {
                return Err(Error::config("lambda", format!("must lie in [0, 1], got {}", self.lambda)));
            }
            Ok(())
        }
    }

    /// Kernel for training points `x` (already standardized if requested).
    pub fn kernel_for(&self, x: &[Vec<f64>]) -> Result<Option<KernelSpec>> {
        let d = x.first().map_or(0, Vec::len);
        Ok(match self.kind {
            ClassifierKind::LinearSvm => Some(KernelSpec::Linear),
            ClassifierKind::GaussianSvm => Some(KernelSpec::Gaussian {
                sigma: self.sigma.unwrap_or_else(|| median_pairwise_distance(x)),
            }),
            ClassifierKind::SigmoidSvm => Some(KernelSpec::Sigmoid {
                a: match self.sigmoid_a {
                    Some(a) => a,
                    None => default_sigmoid_a(d)?,
                },
                b: self.sigmoid_b,
            }),
            _ => None,
        })
    }

    pub fn fit(&self, x: &[Vec<f64>], labels: &[ClassLabel], seed: u64) -> Result<FittedClassifier> {
        self.validate()?;
        let scaler = if self.standardize {
            Some(Standardizer::fit(x)?)
        } else {
            None
        };
        let scaled;
        let x = match &scaler {
            Some(s) => {
                scaled = s.transform(x);
                &scaled[..]
            }
            None => x,
        };
        let model = match (self.kernel_for(x)?, self.kind.variant()) {
            (Some(kernel), _) => {
                let params = SmoParams {
                    c: self.c,
                    tol: self.tol,
                    max_passes: self.max_passes,
                    seed,
                };
                Model::Svm(train_smo(x, labels, &kernel, &params)?)
            }
            (None, Some(variant)) => {
                let cfg = TrainConfig {
                    seed,
                    ..self.train.clone()
                };
                Model::Ensemble(ensembles::train(variant, x, labels, &cfg, self.lambda)?)
            }
            (None, None) => unreachable!("every kind is an SVM or an ensemble"),
        };
        Ok(FittedClassifier { scaler, model })
    }
}

/// Per-feature centering and scaling; zero-spread features keep scale 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(Error::NoSamples);
        }
        let d = x[0].len();
        if let Some(r) = x.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        let mut mean = vec![0.0; d];
        for r in x {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in x {
            for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { mean, scale })
    }

    pub fn transform_row(&self, r: &[f64]) -> Vec<f64> {
        r.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Svm(SvmModel),
    Ensemble(EnsembleModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedClassifier {
    pub scaler: Option<Standardizer>,
    pub model: Model,
}

impl FittedClassifier {
    pub fn predict(&self, x: &[f64]) -> Result<ClassLabel> {
        let owned;
        let x = match &self.scaler {
            Some(s) => {
                if x.len() != s.mean.len() {
                    return Err(Error::DimensionMismatch {
                        expected: s.mean.len(),
                        found: x.len(),
                    });
                }
                owned = s.transform_row(x);
                &owned[..]
            }
            None => x,
        };
        match &self.model {
            Model::Svm(m) => m.predict(x),
            Model::Ensemble(m) => Ok(m.predict(x)?.1),
        }
    }

    pub fn predict_all(&self, x: &[Vec<f64>]) -> Result<Vec<ClassLabel>> {
        x.iter().map(|r| self.predict(r)).collect()
    }
}
