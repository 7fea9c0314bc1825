//! JSON representation of a learned or ground-truth model.
//!
//! Lags are 1-based and variables 0-based. Matrices are nested row arrays.
//! Floats are written in shortest round-trip form, so a reloaded model is
//! bit-identical to the one written.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use plvar::{GvarModel, GvarStructure, TemporalEdge};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub k: usize,
    #[serde(default)]
    pub gamma: Option<f64>,
    pub temporal_edges: Vec<[usize; 3]>,
    pub contemporaneous_edges: Vec<[usize; 2]>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Omega")]
    pub omega: Vec<Vec<f64>>,
    #[serde(default)]
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Objective of each candidate lag length, keyed by lag.
    pub objective_per_k: BTreeMap<usize, f64>,
    pub loglik_trajectory: Vec<f64>,
    pub timings_ms: BTreeMap<String, f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], d: usize, what: &str) -> CliResult<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(CliError::Input(format!("{what} must be a {d}x{d} matrix")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl ModelFile {
    pub fn new(model: &GvarModel, structure: &GvarStructure, gamma: Option<f64>, diagnostics: Option<Diagnostics>) -> Self {
        Self {
            d: structure.dim(),
            k: structure.lag(),
            gamma,
            temporal_edges: structure.temporal_edges().iter().map(|e| [e.lag, e.source, e.target]).collect(),
            contemporaneous_edges: structure.contemporaneous_edges().iter().map(|&(a, b)| [a, b]).collect(),
            a: model.lag_matrices().iter().map(rows).collect(),
            omega: rows(model.precision()),
            diagnostics,
        }
    }

    pub fn structure(&self) -> CliResult<GvarStructure> {
        let edges = self.temporal_edges.iter().map(|&[lag, source, target]| TemporalEdge { lag, source, target });
        let pairs = self.contemporaneous_edges.iter().map(|&[a, b]| (a.min(b), a.max(b)));
        Ok(GvarStructure::new(self.d, self.k, edges, pairs)?)
    }

    pub fn model(&self) -> CliResult<GvarModel> {
        if self.a.len() != self.k {
            return Err(CliError::Input(format!("expected {} lag matrices, found {}", self.k, self.a.len())));
        }
        let lags = self
            .a
            .iter()
            .enumerate()
            .map(|(m, a)| matrix(a, self.d, &format!("A[{}]", m + 1)))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(GvarModel::new(lags, matrix(&self.omega, self.d, "Omega")?)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serialises");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: invalid model JSON: {e}", path.display())))
    }
}
