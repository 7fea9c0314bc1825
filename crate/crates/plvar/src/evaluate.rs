//! Structure-recovery metrics, lag histograms and one-step prediction error.

use std::collections::{BTreeMap, BTreeSet};
use std::hash::Hash;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{GvarModel, GvarStructure, TimeSeries};
use crate::search::TemporalResult;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
}

impl PrecisionRecall {
    /// Precision is 1 for an empty estimate and recall is 1 for an empty truth.
    pub fn from_sets<T: Ord + Hash>(estimated: &BTreeSet<T>, truth: &BTreeSet<T>) -> Self {
        let hits = estimated.intersection(truth).count() as f64;
        let precision = if estimated.is_empty() { 1.0 } else { hits / estimated.len() as f64 };
        let recall = if truth.is_empty() { 1.0 } else { hits / truth.len() as f64 };
        Self { precision, recall }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureMetrics {
    pub temporal: PrecisionRecall,
    pub contemporaneous: PrecisionRecall,
}

/// Edge-level precision and recall, separately for the temporal and the
/// contemporaneous graph. Temporal edges match only when lag, source and
/// target all agree.
pub fn precision_recall(estimated: &GvarStructure, truth: &GvarStructure) -> Result<StructureMetrics> {
    if estimated.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), found: estimated.dim() });
    }
    Ok(StructureMetrics {
        temporal: PrecisionRecall::from_sets(estimated.temporal_edges(), truth.temporal_edges()),
        contemporaneous: PrecisionRecall::from_sets(estimated.contemporaneous_edges(), truth.contemporaneous_edges()),
    })
}

/// Mean squared one-step-ahead prediction error over `t = k+1..N` and all
/// coordinates, predicting from the observed past.
pub fn one_step_mse(model: &GvarModel, test: &TimeSeries) -> Result<f64> {
    let k = model.lag();
    let d = model.dim();
    if test.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: test.dim() });
    }
    if test.len() <= k {
        return Err(Error::InvalidArgument(format!(
            "test series of length {} is too short for lag {k}",
            test.len()
        )));
    }
    let mut total = 0.0;
    for t in k..test.len() {
        let past: Vec<DVector<f64>> = (1..=k).map(|m| test.row(t - m)).collect();
        let err = test.row(t) - model.predict(&past);
        total += err.norm_squared();
    }
    Ok(total / ((test.len() - k) * d) as f64)
}

/// Number of runs that selected each lag length.
pub fn lag_histogram(runs: &[TemporalResult]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for run in runs {
        *counts.entry(run.lag).or_insert(0) += 1;
    }
    counts
}
