//! Principal component analysis via the SVD of the centered data matrix.
//!
//! Eigenvalues use the sample-covariance convention (divisor `n - 1`).
//! Component signs are normalized so that the entry of largest magnitude in
//! every component is positive (ties go to the lowest index).

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 30;

const MAGIC: &[u8; 4] = b"PCAM";
const FORMAT_VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    mean: Vec<f64>,
    /// `k` rows of length `d`.
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl PcaModel {
    pub fn fit(data: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = data.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "PCA needs at least 2 rows, got {n}"
            )));
        }
        let d = data[0].len();
        if let Some(row) = data.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: row.len(),
            });
        }
        let max_k = (n - 1).min(d);
        if k == 0 || k > max_k {
            return Err(Error::InvalidArgument(format!(
                "number of components {k} outside 1..={max_k}"
            )));
        }
        if data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("PCA input".into()));
        }

        let mut mean = vec![0.0; d];
        for row in data {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        if data.iter().all(|r| r == &data[0]) {
            return Err(Error::ZeroVariance);
        }
        let centered = DMatrix::from_fn(n, d, |i, j| data[i][j] - mean[j]);

        let svd = centered.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

        let denom = (n - 1) as f64;
        let mut components = Vec::with_capacity(k);
        let mut eigenvalues = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            let mut row: Vec<f64> = v_t.row(idx).iter().copied().collect();
            normalize_sign(&mut row);
            components.push(row);
            let s = svd.singular_values[idx];
            eigenvalues.push((s * s / denom).max(0.0));
        }
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Scores `components * (x - mean)` of a single row.
    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: row.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(ci, (x, m))| ci * (x - m))
                    .sum()
            })
            .collect())
    }

    pub fn transform(&self, data: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        data.iter().map(|r| self.transform_row(r)).collect()
    }

    /// Map scores back to the input space.
    pub fn reconstruct_row(&self, scores: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, s) in self.components.iter().zip(scores) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += s * ci;
            }
        }
        out
    }

    /// Flat little-endian record: magic, version byte, `d`, `k`, mean,
    /// components row-major, eigenvalues.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (d, k) = (self.dim(), self.n_components());
        let mut out = Vec::with_capacity(13 + 8 * (d + k * d + k));
        out.extend_from_slice(MAGIC);
        out.push(FORMAT_VERSION);
        out.extend_from_slice(&(d as u32).to_le_bytes());
        out.extend_from_slice(&(k as u32).to_le_bytes());
        let values = self
            .mean
            .iter()
            .chain(self.components.iter().flatten())
            .chain(&self.eigenvalues);
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 13 || &bytes[..4] != MAGIC {
            return Err(Error::Malformed("not a PCA model record".into()));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(Error::SchemaVersion {
                expected: u32::from(FORMAT_VERSION),
                found: u32::from(bytes[4]),
            });
        }
        let read_u32 = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (d, k) = (read_u32(5), read_u32(9));
        let expected = 13 + 8 * (d + k * d + k);
        if bytes.len() != expected {
            return Err(Error::Malformed(format!(
                "PCA record has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let mut values = bytes[13..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let mean: Vec<f64> = values.by_ref().take(d).collect();
        let components = (0..k).map(|_| values.by_ref().take(d).collect()).collect();
        let eigenvalues = values.collect();
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn normalize_sign(row: &mut [f64]) {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if v.abs() > row[best].abs() {
            best = i;
        }
    }
    if row[best] < 0.0 {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
}
