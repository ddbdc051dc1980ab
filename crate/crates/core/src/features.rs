//! Feature array construction: frame-major PC scores with appended velocity
//! and acceleration blocks, plus sliding-window enumeration and slicing.
//!
//! Row layout for `T` frames and `k` components:
//!
//! ```text
//! [ f0_pc0 .. f0_pc{k-1} | f1_pc0 .. | ... ]   scores,        T * k
//! [ v0_pc0 .. v0_pc{k-1} | ... ]               velocity, (T - 1) * k
//! [ a0_pc0 .. a0_pc{k-1} | ... ]               acceleration, (T - 2) * k
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW_LENGTH: usize = 40;

/// How consecutive scores are combined into a velocity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityConvention {
    /// `v_j = p_{j+1} - p_j`.
    #[default]
    Difference,
    /// `v_j = p_j + p_{j+1}`, the sum form kept for fidelity experiments.
    PaperLiteralSum,
}

pub fn velocity(series: &[f64], convention: VelocityConvention) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "velocity needs at least 2 values, got {}",
            series.len()
        )));
    }
    Ok(series
        .windows(2)
        .map(|w| match convention {
            VelocityConvention::Difference => w[1] - w[0],
            VelocityConvention::PaperLiteralSum => w[0] + w[1],
        })
        .collect())
}

pub fn acceleration(velocity: &[f64]) -> Result<Vec<f64>> {
    if velocity.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "acceleration needs at least 2 velocity values, got {}",
            velocity.len()
        )));
    }
    Ok(velocity.windows(2).map(|w| w[1] - w[0]).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Score,
    Velocity,
    Acceleration,
}

/// Describes where every `(block, frame, pc)` triple lives in a row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureLayout {
    pub frames: usize,
    pub pcs: usize,
    pub has_velocity: bool,
    pub has_acceleration: bool,
    /// Absolute index of local frame 0; only used for column names.
    pub first_frame: usize,
}

impl FeatureLayout {
    pub fn block_frames(&self, block: Block) -> usize {
        match block {
            Block::Score => self.frames,
            Block::Velocity if self.has_velocity => self.frames.saturating_sub(1),
            Block::Acceleration if self.has_acceleration => self.frames.saturating_sub(2),
            _ => 0,
        }
    }

    fn block_offset(&self, block: Block) -> usize {
        match block {
            Block::Score => 0,
            Block::Velocity => self.block_frames(Block::Score) * self.pcs,
            Block::Acceleration => {
                (self.block_frames(Block::Score) + self.block_frames(Block::Velocity)) * self.pcs
            }
        }
    }

    pub fn row_len(&self) -> usize {
        (self.block_frames(Block::Score)
            + self.block_frames(Block::Velocity)
            + self.block_frames(Block::Acceleration))
            * self.pcs
    }

    /// Column index of `(block, local frame, pc)`, if present.
    pub fn column(&self, block: Block, frame: usize, pc: usize) -> Option<usize> {
        (frame < self.block_frames(block) && pc < self.pcs)
            .then(|| self.block_offset(block) + frame * self.pcs + pc)
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.row_len());
        for (block, prefix) in [(Block::Score, 'f'), (Block::Velocity, 'v'), (Block::Acceleration, 'a')] {
            for t in 0..self.block_frames(block) {
                for j in 0..self.pcs {
                    names.push(format!("{prefix}{}_pc{j}", self.first_frame + t));
                }
            }
        }
        names
    }
}

/// One feature row per sample, all sharing a [`FeatureLayout`].
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    layout: FeatureLayout,
    rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_rows(layout: FeatureLayout, rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.len() != layout.row_len()) {
            return Err(Error::DimensionMismatch {
                expected: layout.row_len(),
                found: r.len(),
            });
        }
        Ok(FeatureMatrix { layout, rows })
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        indices.iter().map(|&i| self.rows[i].clone()).collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.layout.column_names().join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                write!(out, "{v}").expect("writing to a String");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

/// Build the feature array from per-sample `T x k` score blocks.
pub fn assemble(
    scores: &[Vec<Vec<f64>>],
    include_velocity: bool,
    include_acceleration: bool,
    convention: VelocityConvention,
) -> Result<FeatureMatrix> {
    if include_acceleration && !include_velocity {
        return Err(Error::InvalidArgument(
            "acceleration features require velocity features".into(),
        ));
    }
    let first = scores
        .first()
        .ok_or_else(|| Error::InvalidArgument("no samples to assemble".into()))?;
    let frames = first.len();
    let pcs = first.first().map_or(0, Vec::len);
    if pcs == 0 {
        return Err(Error::InvalidArgument("score blocks are empty".into()));
    }
    let min_frames = match (include_velocity, include_acceleration) {
        (_, true) => 3,
        (true, false) => 2,
        _ => 1,
    };
    if frames < min_frames {
        return Err(Error::InvalidArgument(format!(
            "{frames} frames are too few for the requested blocks"
        )));
    }
    let layout = FeatureLayout {
        frames,
        pcs,
        has_velocity: include_velocity,
        has_acceleration: include_acceleration,
        first_frame: 0,
    };

    let mut rows = Vec::with_capacity(scores.len());
    for sample in scores {
        if sample.len() != frames {
            return Err(Error::DimensionMismatch {
                expected: frames,
                found: sample.len(),
            });
        }
        if let Some(f) = sample.iter().find(|f| f.len() != pcs) {
            return Err(Error::DimensionMismatch {
                expected: pcs,
                found: f.len(),
            });
        }
        let mut row = vec![0.0; layout.row_len()];
        for (t, frame) in sample.iter().enumerate() {
            row[t * pcs..(t + 1) * pcs].copy_from_slice(frame);
        }
        if include_velocity {
            for j in 0..pcs {
                let column: Vec<f64> = sample.iter().map(|f| f[j]).collect();
                let v = velocity(&column, convention)?;
                for (t, &value) in v.iter().enumerate() {
                    row[layout.column(Block::Velocity, t, j).expect("in layout")] = value;
                }
                if include_acceleration {
                    for (t, value) in acceleration(&v)?.into_iter().enumerate() {
                        row[layout.column(Block::Acceleration, t, j).expect("in layout")] = value;
                    }
                }
            }
        }
        rows.push(row);
    }
    FeatureMatrix::from_rows(layout, rows)
}

/// Sliding-window length and stride, both in frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub length: usize,
    pub stride: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            length: DEFAULT_WINDOW_LENGTH,
            stride: 1,
        }
    }
}

/// Inclusive frame range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Window {
    pub start: usize,
    pub end: usize,
}

impl Window {
    pub fn new(start: usize, end: usize) -> Self {
        Window { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

pub fn window_slices(frames: usize, spec: WindowSpec) -> Result<Vec<Window>> {
    if spec.length == 0 || spec.stride == 0 {
        return Err(Error::InvalidArgument(
            "window length and stride must be at least 1".into(),
        ));
    }
    if spec.length > frames {
        return Err(Error::InvalidArgument(format!(
            "window length {} exceeds {frames} frames",
            spec.length
        )));
    }
    Ok((0..=frames - spec.length)
        .step_by(spec.stride)
        .map(|s| Window::new(s, s + spec.length - 1))
        .collect())
}

/// Restrict a feature matrix to the frames of `w` (local frame indices).
///
/// Velocity and acceleration columns are taken from the already computed
/// blocks: velocity frames `s..=e-1` and acceleration frames `s..=e-2`.
pub fn slice_features(fm: &FeatureMatrix, w: Window) -> Result<FeatureMatrix> {
    let src = fm.layout;
    if w.start > w.end || w.end >= src.frames {
        return Err(Error::InvalidArgument(format!(
            "window {w} outside 0..{} frames",
            src.frames
        )));
    }
    let layout = FeatureLayout {
        frames: w.len(),
        first_frame: src.first_frame + w.start,
        ..src
    };
    let ranges: Vec<(usize, usize)> = [Block::Score, Block::Velocity, Block::Acceleration]
        .into_iter()
        .filter_map(|b| {
            let count = layout.block_frames(b);
            let begin = src.column(b, w.start, 0)?;
            (count > 0).then(|| (begin, begin + count * src.pcs))
        })
        .collect();
    let rows = fm
        .rows
        .iter()
        .map(|row| {
            ranges
                .iter()
                .flat_map(|&(a, b)| row[a..b].iter().copied())
                .collect()
        })
        .collect();
    FeatureMatrix::from_rows(layout, rows)
}
