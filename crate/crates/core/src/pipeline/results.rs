//! Results file (JSON, versioned) and the comparison table rendered from it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::format_percent;
use crate::features::Window;

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

/// Contents of `results.json`.
///
/// `run_id` hashes the canonical config text (so it ignores `jobs` and the
/// output directory) and `dataset_id` hashes the dataset CSV text; both are
/// 16 hex digits of FNV-1a.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResults {
    pub schema_version: u32,
    pub run_id: String,
    pub dataset_id: String,
    pub config: BTreeMap<String, String>,
    pub runs: Vec<PairingRun>,
}

/// Search results of one wild/mutated pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingRun {
    pub pairing: String,
    pub samples: usize,
    pub wild: usize,
    pub mutated: usize,
    /// PCA components actually used, after capping at the data dimension.
    pub pca_components: usize,
    pub classifiers: Vec<String>,
    pub windows: Vec<WindowCells>,
    /// Per-classifier argmin window.
    pub best: Vec<ClassifierBest>,
    /// Window with the lowest mean error across classifiers.
    pub best_frames: Window,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowCells {
    pub window: Window,
    /// One cell per classifier, in `classifiers` order.
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// Mean CV error; for swept classifiers, the error at `lambda`.
    pub error: f64,
    pub fold_errors: Vec<f64>,
    /// Penalty coefficient used, when the classifier has one.
    pub lambda: Option<f64>,
    /// CV error at each grid point, when λ was swept.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep_errors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierBest {
    pub classifier: String,
    pub window: Window,
    pub error: f64,
    pub lambda: Option<f64>,
}

impl PairingRun {
    /// Build from per-window cells, filling in the argmin fields. Ties go to
    /// the earliest window.
    pub fn from_cells(
        pairing: String,
        counts: (usize, usize),
        pca_components: usize,
        classifiers: Vec<String>,
        windows: Vec<WindowCells>,
    ) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::InvalidArgument("no windows evaluated".into()));
        }
        let argmin = |score: &dyn Fn(&WindowCells) -> f64| {
            let mut best = &windows[0];
            for w in &windows[1..] {
                if score(w) < score(best) {
                    best = w;
                }
            }
            best
        };
        let best = (0..classifiers.len())
            .map(|c| {
                let w = argmin(&|w| w.cells[c].error);
                ClassifierBest {
                    classifier: classifiers[c].clone(),
                    window: w.window,
                    error: w.cells[c].error,
                    lambda: w.cells[c].lambda,
                }
            })
            .collect();
        let best_frames = argmin(&|w| mean_error(w)).window;
        Ok(PairingRun {
            pairing,
            samples: counts.0 + counts.1,
            wild: counts.0,
            mutated: counts.1,
            pca_components,
            classifiers,
            windows,
            best,
            best_frames,
        })
    }

    /// Errors shown in the table: every classifier at `best_frames`.
    pub fn table_errors(&self) -> Vec<f64> {
        self.windows
            .iter()
            .find(|w| w.window == self.best_frames)
            .map(|w| w.cells.iter().map(|c| c.error).collect())
            .unwrap_or_default()
    }
}

fn mean_error(w: &WindowCells) -> f64 {
    w.cells.iter().map(|c| c.error).sum::<f64>() / w.cells.len() as f64
}

impl RunResults {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("results serialize");
        s.push('\n');
        s
    }

    /// Parse a results file, checking the schema version before anything else.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Malformed(format!("results file: {e}")))?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Malformed("results file has no schema_version".into()))?;
        if found != u64::from(RESULTS_SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                expected: RESULTS_SCHEMA_VERSION,
                found: u32::try_from(found).unwrap_or(u32::MAX),
            });
        }
        let results: RunResults =
            serde_json::from_value(value).map_err(|e| Error::Malformed(format!("results file: {e}")))?;
        for run in &results.runs {
            for w in &run.windows {
                if w.cells.len() != run.classifiers.len() {
                    return Err(Error::Malformed(format!(
                        "{}: window {} has {} cells for {} classifiers",
                        run.pairing,
                        w.window,
                        w.cells.len(),
                        run.classifiers.len()
                    )));
                }
            }
        }
        Ok(results)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    fn sorted_runs(&self) -> Vec<&PairingRun> {
        let mut runs: Vec<&PairingRun> = self.runs.iter().collect();
        runs.sort_by(|a, b| a.pairing.cmp(&b.pairing));
        runs
    }

    /// Long-format CSV: one line per (pairing, window, classifier).
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("pairing,start,end,classifier,error,lambda\n");
        for run in self.sorted_runs() {
            for w in &run.windows {
                for (name, c) in run.classifiers.iter().zip(&w.cells) {
                    let lambda = c.lambda.map(|l| l.to_string()).unwrap_or_default();
                    out.push_str(&format!(
                        "{},{},{},{name},{},{lambda}\n",
                        run.pairing, w.window.start, w.window.end, c.error
                    ));
                }
            }
        }
        out
    }

    fn table_rows(&self) -> Option<(Vec<String>, Vec<Vec<String>>)> {
        let runs = self.sorted_runs();
        let first = runs.first()?;
        let mut header = vec!["Pairing".to_string()];
        header.extend(first.classifiers.iter().cloned());
        header.push("Best Frames".into());
        let rows = runs
            .iter()
            .map(|run| {
                let mut row = vec![run.pairing.clone()];
                row.extend(run.table_errors().into_iter().map(format_percent));
                row.push(run.best_frames.to_string());
                row
            })
            .collect();
        Some((header, rows))
    }

    /// Plain-text table, columns padded to their widest cell.
    pub fn render_table(&self) -> String {
        let Some((header, rows)) = self.table_rows() else {
            return "no runs\n".into();
        };
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                std::iter::once(&header)
                    .chain(&rows)
                    .map(|r| r.get(c).map_or(0, String::len))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |r: &Vec<String>| {
            let cells: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
            cells.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&header);
        out.push_str(&line(&widths.iter().map(|w| "-".repeat(*w)).collect()));
        for r in &rows {
            out.push_str(&line(r));
        }
        out
    }

    pub fn render_table_csv(&self) -> String {
        let Some((header, rows)) = self.table_rows() else {
            return "no runs\n".into();
        };
        std::iter::once(&header)
            .chain(&rows)
            .map(|r| r.join(",") + "\n")
            .collect()
    }
}
