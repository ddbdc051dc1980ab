//! Time-series datasets: in-memory representation, CSV ingestion/export and
//! a seeded synthetic generator of root-growth-like trajectories.
//!
//! A sample is a sequence of `T` frame vectors of dimension `d`. Labels are
//! stored in files as the text tokens `wild` / `mutated`; the numeric
//! encodings used by the classifiers are derived from [`ClassLabel`].

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Wild,
    Mutated,
}

impl ClassLabel {
    /// `-1` for wild, `+1` for mutated.
    pub fn signed(self) -> f64 {
        match self {
            ClassLabel::Wild => -1.0,
            ClassLabel::Mutated => 1.0,
        }
    }

    /// `0` for wild, `1` for mutated.
    pub fn unit(self) -> f64 {
        match self {
            ClassLabel::Wild => 0.0,
            ClassLabel::Mutated => 1.0,
        }
    }

    pub fn from_signed(value: f64) -> Result<Self> {
        if value == -1.0 {
            Ok(ClassLabel::Wild)
        } else if value == 1.0 {
            Ok(ClassLabel::Mutated)
        } else {
            Err(Error::InvalidArgument(format!(
                "signed label must be -1 or +1, got {value}"
            )))
        }
    }

    pub fn from_unit(value: f64) -> Result<Self> {
        if value == 0.0 {
            Ok(ClassLabel::Wild)
        } else if value == 1.0 {
            Ok(ClassLabel::Mutated)
        } else {
            Err(Error::InvalidArgument(format!(
                "unit label must be 0 or 1, got {value}"
            )))
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ClassLabel::Wild => "wild",
            ClassLabel::Mutated => "mutated",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token.trim().to_ascii_lowercase().as_str() {
            "wild" => Some(ClassLabel::Wild),
            "mutated" => Some(ClassLabel::Mutated),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesSample {
    pub id: String,
    pub group_tag: String,
    pub label: ClassLabel,
    pub frames: Vec<Vec<f64>>,
}

impl TimeSeriesSample {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn dim(&self) -> usize {
        self.frames.first().map_or(0, Vec::len)
    }
}

/// Wild and mutated group tags placed against each other for classification.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pairing {
    pub wild: String,
    pub mutated: String,
}

impl Pairing {
    pub fn new(wild: impl Into<String>, mutated: impl Into<String>) -> Self {
        Pairing {
            wild: wild.into(),
            mutated: mutated.into(),
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.wild, self.mutated)
    }
}

/// A validated collection of samples sharing `T` and `d`, with both classes
/// present.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<TimeSeriesSample>,
    pairing: Option<Pairing>,
    frames: usize,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<TimeSeriesSample>, pairing: Option<Pairing>) -> Result<Self> {
        let first = samples.first().ok_or(Error::NoSamples)?;
        let frames = first.frame_count();
        let dim = first.dim();
        if frames < 3 {
            return Err(Error::InvalidDataset(format!(
                "sample `{}` has {frames} frames; at least 3 are required",
                first.id
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidDataset(format!(
                "sample `{}` has zero-dimensional frames",
                first.id
            )));
        }
        for s in &samples {
            if s.frame_count() != frames {
                return Err(Error::InvalidDataset(format!(
                    "sample `{}` has {} frames, expected {frames}",
                    s.id,
                    s.frame_count()
                )));
            }
            if let Some(bad) = s.frames.iter().position(|f| f.len() != dim) {
                return Err(Error::InvalidDataset(format!(
                    "sample `{}` frame {bad} has dimension {}, expected {dim}",
                    s.id,
                    s.frames[bad].len()
                )));
            }
        }
        for class in [ClassLabel::Wild, ClassLabel::Mutated] {
            if !samples.iter().any(|s| s.label == class) {
                return Err(Error::InvalidDataset(format!("class `{class}` is empty")));
            }
        }
        Ok(Dataset {
            samples,
            pairing,
            frames,
            dim,
        })
    }

    pub fn samples(&self) -> &[TimeSeriesSample] {
        &self.samples
    }

    pub fn pairing(&self) -> Option<&Pairing> {
        self.pairing.as_ref()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<ClassLabel> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Distinct group tags in order of first appearance.
    pub fn group_tags(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.samples
            .iter()
            .map(|s| s.group_tag.as_str())
            .filter(|t| seen.insert(*t))
            .collect()
    }

    /// Keep only the samples of the two groups, relabelled wild/mutated.
    pub fn split_by_pairing(&self, wild_tag: &str, mutated_tag: &str) -> Result<Dataset> {
        for tag in [wild_tag, mutated_tag] {
            if !self.samples.iter().any(|s| s.group_tag == tag) {
                return Err(Error::UnknownTag(tag.to_string()));
            }
        }
        if wild_tag == mutated_tag {
            return Err(Error::InvalidDataset(format!(
                "pairing uses `{wild_tag}` for both classes; one class would be empty"
            )));
        }
        let samples = self
            .samples
            .iter()
            .filter_map(|s| {
                let label = if s.group_tag == wild_tag {
                    ClassLabel::Wild
                } else if s.group_tag == mutated_tag {
                    ClassLabel::Mutated
                } else {
                    return None;
                };
                Some(TimeSeriesSample {
                    label,
                    ..s.clone()
                })
            })
            .collect();
        Dataset::new(samples, Some(Pairing::new(wild_tag, mutated_tag)))
    }
}

// ---------------------------------------------------------------------------
// CSV

const FIXED_COLUMNS: [&str; 4] = ["sample_id", "group_tag", "label", "frame_index"];
const MANIFEST_VERSION: u32 = 1;

/// Companion manifest path: `data.csv` -> `data.manifest`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest")
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dataset = parse_csv(&text)?;
    let manifest = manifest_path(path);
    if manifest.exists() {
        let m = Manifest::read(&manifest)?;
        m.check(&dataset)?;
        if let (Some(wild), Some(mutated)) = (m.wild_tag, m.mutated_tag) {
            dataset.pairing = Some(Pairing { wild, mutated });
        }
    }
    Ok(dataset)
}

/// Parse dataset CSV text (header plus one row per frame).
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();

    let header = match records.next() {
        None => return Err(Error::NoSamples),
        Some(r) => r.map_err(|e| Error::row(1, e.to_string()))?,
    };
    if header.len() <= FIXED_COLUMNS.len()
        || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b)
    {
        return Err(Error::row(
            1,
            "header must be `sample_id,group_tag,label,frame_index,v0,...`",
        ));
    }
    let dim = header.len() - FIXED_COLUMNS.len();
    for (j, name) in header.iter().skip(FIXED_COLUMNS.len()).enumerate() {
        if name != format!("v{j}") {
            return Err(Error::row(1, format!("expected column `v{j}`, found `{name}`")));
        }
    }

    let mut samples: Vec<TimeSeriesSample> = Vec::new();
    let mut finished: HashSet<String> = HashSet::new();
    for record in records {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::row(row, e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(Error::row(
                row,
                format!(
                    "ragged row: {} fields, expected {} (frame dimension {dim})",
                    record.len(),
                    header.len()
                ),
            ));
        }
        let id = &record[0];
        let tag = &record[1];
        let label = ClassLabel::from_token(&record[2])
            .ok_or_else(|| Error::row(row, format!("unknown label token `{}`", &record[2])))?;
        let frame_index: usize = record[3]
            .parse()
            .map_err(|_| Error::row(row, format!("bad frame_index `{}`", &record[3])))?;
        let values = record
            .iter()
            .skip(FIXED_COLUMNS.len())
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::row(row, format!("bad number `{v}`")))
            })
            .collect::<Result<Vec<f64>>>()?;

        let continues = samples.last().is_some_and(|s| s.id == id);
        if !continues {
            if let Some(prev) = samples.last() {
                finished.insert(prev.id.clone());
            }
            if finished.contains(id) {
                return Err(Error::row(
                    row,
                    format!("rows of sample `{id}` are not contiguous"),
                ));
            }
            samples.push(TimeSeriesSample {
                id: id.to_string(),
                group_tag: tag.to_string(),
                label,
                frames: Vec::new(),
            });
        }
        let sample = samples.last_mut().expect("pushed above");
        if sample.group_tag != tag || sample.label != label {
            return Err(Error::row(
                row,
                format!("sample `{id}` changes group tag or label mid-series"),
            ));
        }
        if frame_index != sample.frames.len() {
            return Err(Error::row(
                row,
                format!(
                    "sample `{id}`: frame_index {frame_index}, expected {}",
                    sample.frames.len()
                ),
            ));
        }
        sample.frames.push(values);
    }
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let frames = samples[0].frames.len();
    if let Some(bad) = samples.iter().find(|s| s.frames.len() != frames) {
        return Err(Error::InvalidDataset(format!(
            "sample `{}` has {} frames, expected {frames}",
            bad.id,
            bad.frames.len()
        )));
    }
    Dataset::new(samples, None)
}

pub fn to_csv_string(ds: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(&FIXED_COLUMNS.join(","));
    for j in 0..ds.dim() {
        out.push_str(&format!(",v{j}"));
    }
    out.push('\n');
    for s in ds.samples() {
        for (t, frame) in s.frames.iter().enumerate() {
            out.push_str(&format!("{},{},{},{t}", s.id, s.group_tag, s.label.token()));
            for v in frame {
                // `Display` for f64 is the shortest representation that
                // parses back to the same bits.
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Write the dataset CSV and its companion manifest.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(ds)).map_err(|e| Error::io(path, e))?;
    Manifest::for_dataset(ds).write(&manifest_path(path))
}

/// Key=value companion file recording `T`, `d` and the pairing tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub samples: usize,
    pub frames: usize,
    pub dim: usize,
    pub wild_tag: Option<String>,
    pub mutated_tag: Option<String>,
}

impl Manifest {
    pub fn for_dataset(ds: &Dataset) -> Self {
        Manifest {
            samples: ds.len(),
            frames: ds.frames(),
            dim: ds.dim(),
            wild_tag: ds.pairing().map(|p| p.wild.clone()),
            mutated_tag: ds.pairing().map(|p| p.mutated.clone()),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "format_version={MANIFEST_VERSION}\nsamples={}\nframes={}\ndim={}\n",
            self.samples, self.frames, self.dim
        );
        if let Some(w) = &self.wild_tag {
            s.push_str(&format!("wild_tag={w}\n"));
        }
        if let Some(m) = &self.mutated_tag {
            s.push_str(&format!("mutated_tag={m}\n"));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest {
            samples: 0,
            frames: 0,
            dim: 0,
            wild_tag: None,
            mutated_tag: None,
        };
        let count = |k: &str, v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Malformed(format!("manifest `{k}` is not a count: `{v}`")))
        };
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Malformed(format!("manifest line `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "format_version" => {
                    let found = count(k, v)? as u32;
                    if found != MANIFEST_VERSION {
                        return Err(Error::SchemaVersion {
                            expected: MANIFEST_VERSION,
                            found,
                        });
                    }
                }
                "samples" => m.samples = count(k, v)?,
                "frames" => m.frames = count(k, v)?,
                "dim" => m.dim = count(k, v)?,
                "wild_tag" => m.wild_tag = Some(v.to_string()),
                "mutated_tag" => m.mutated_tag = Some(v.to_string()),
                other => return Err(Error::Malformed(format!("unknown manifest key `{other}`"))),
            }
        }
        Ok(m)
    }

    fn check(&self, ds: &Dataset) -> Result<()> {
        if self.frames != ds.frames() || self.dim != ds.dim() || self.samples != ds.len() {
            return Err(Error::InvalidDataset(format!(
                "manifest says {} samples, T={}, d={}; file has {} samples, T={}, d={}",
                self.samples,
                self.frames,
                self.dim,
                ds.len(),
                ds.frames(),
                ds.dim()
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Parameters of the synthetic root-growth generator.
///
/// Every dimension of a class-`c` sample (`c = 0` wild, `c = 1` mutated)
/// follows `offset + (base_velocity + c * velocity_gap) * t
/// + 0.5 * c * acceleration_gap * t^2` plus i.i.d. Gaussian frame noise,
/// where `t` is the frame index and `offset` is a per-sample intercept drawn
/// with sd `offset_sd`.
///
/// With `signal_frames = Some((a, b))` the class difference is confined to
/// frames `a..=b` (measured in local time `t - a`), and frames outside that
/// range carry no class signal and noise of sd `background_sd`.
///
/// Under [`NoiseModel::RandomWalk`] the per-frame Gaussian draws are
/// increments: the noise of frame `t` is the running sum of draws `0..=t`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_per_class: usize,
    pub frames: usize,
    pub dim: usize,
    pub base_velocity: f64,
    pub velocity_gap: f64,
    pub acceleration_gap: f64,
    pub noise_sd: f64,
    pub noise_model: NoiseModel,
    pub offset_sd: f64,
    pub signal_frames: Option<(usize, usize)>,
    pub background_sd: f64,
    pub wild_tag: String,
    pub mutated_tag: String,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseModel {
    /// Independent noise in every frame.
    #[default]
    Independent,
    /// Independent increments accumulated over frames.
    RandomWalk,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_per_class: 20,
            frames: 300,
            dim: 6,
            base_velocity: 0.05,
            velocity_gap: 0.01,
            acceleration_gap: 1e-4,
            noise_sd: 6.0,
            noise_model: NoiseModel::Independent,
            offset_sd: 0.0,
            signal_frames: None,
            background_sd: 0.0,
            wild_tag: "wtS2".to_string(),
            mutated_tag: "331S2".to_string(),
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class < 2 {
            return Err(Error::config("n_per_class", "must be at least 2"));
        }
        if self.frames < 3 {
            return Err(Error::config("frames", "must be at least 3"));
        }
        if self.dim == 0 {
            return Err(Error::config("dim", "must be at least 1"));
        }
        for (field, v) in [
            ("noise_sd", self.noise_sd),
            ("offset_sd", self.offset_sd),
            ("background_sd", self.background_sd),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be finite and >= 0, got {v}")));
            }
        }
        for (field, v) in [
            ("base_velocity", self.base_velocity),
            ("velocity_gap", self.velocity_gap),
            ("acceleration_gap", self.acceleration_gap),
        ] {
            if !v.is_finite() {
                return Err(Error::config(field, format!("must be finite, got {v}")));
            }
        }
        if let Some((a, b)) = self.signal_frames {
            if a > b || b >= self.frames {
                return Err(Error::config(
                    "signal_frames",
                    format!("({a}, {b}) is not a frame range within 0..{}", self.frames),
                ));
            }
        }
        if self.wild_tag.is_empty() || self.mutated_tag.is_empty() {
            return Err(Error::config("wild_tag", "group tags must be non-empty"));
        }
        if self.wild_tag == self.mutated_tag {
            return Err(Error::config("mutated_tag", "must differ from wild_tag"));
        }
        Ok(())
    }
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut samples = Vec::with_capacity(2 * cfg.n_per_class);
    for (class_index, label) in [ClassLabel::Wild, ClassLabel::Mutated].into_iter().enumerate() {
        let c = class_index as f64;
        let tag = match label {
            ClassLabel::Wild => &cfg.wild_tag,
            ClassLabel::Mutated => &cfg.mutated_tag,
        };
        for i in 0..cfg.n_per_class {
            let stream = (class_index * cfg.n_per_class + i) as u64;
            let mut rng = rng_from_seed(derive_seed(cfg.seed, "synthetic-sample", stream));
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let offsets: Vec<f64> = (0..cfg.dim)
                .map(|_| cfg.offset_sd * normal.sample(&mut rng))
                .collect();
            let mut walk = vec![0.0; cfg.dim];
            let frames = (0..cfg.frames)
                .map(|t| {
                    let (mean, sd) = trajectory(cfg, c, t);
                    offsets
                        .iter()
                        .zip(&mut walk)
                        .map(|(o, w)| {
                            let draw = sd * normal.sample(&mut rng);
                            let noise = match cfg.noise_model {
                                NoiseModel::Independent => draw,
                                NoiseModel::RandomWalk => {
                                    *w += draw;
                                    *w
                                }
                            };
                            o + mean + noise
                        })
                        .collect()
                })
                .collect();
            samples.push(TimeSeriesSample {
                id: format!("{tag}-{i:04}"),
                group_tag: tag.clone(),
                label,
                frames,
            });
        }
    }
    Dataset::new(samples, Some(Pairing::new(&cfg.wild_tag, &cfg.mutated_tag)))
}

/// Mean value and noise sd of class `c` at frame `t`.
fn trajectory(cfg: &SyntheticConfig, c: f64, t: usize) -> (f64, f64) {
    let tf = t as f64;
    let base = cfg.base_velocity * tf;
    let class_term = |local: f64| c * (cfg.velocity_gap * local + 0.5 * cfg.acceleration_gap * local * local);
    match cfg.signal_frames {
        None => (base + class_term(tf), cfg.noise_sd),
        Some((a, b)) if (a..=b).contains(&t) => (base + class_term((t - a) as f64), cfg.noise_sd),
        Some(_) => (base, cfg.background_sd),
    }
}
