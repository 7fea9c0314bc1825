//! The two-stage structure learner: temporal blankets with lag selection,
//! then contemporaneous blankets on the lag-regression residuals.

mod contemporaneous;
mod greedy;
mod temporal;

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};

pub use contemporaneous::{learn_contemporaneous, or_closure, ContemporaneousResult};
pub use greedy::{greedy_markov_blanket, GreedyOutcome};
pub use temporal::{
    assemble_lag_matrices, learn_temporal, learn_temporal_for_lag, ols_node, residuals, LagFit, TemporalResult,
};

use crate::error::Result;
use crate::model::{GvarStructure, TemporalEdge, TimeSeries};
use crate::par::Execution;
use crate::params::FitDiagnostics;
use crate::scoring::build_lagged_matrix;
use crate::GvarModel;

/// Settings for [`learn_structure`].
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Largest lag length `K` considered.
    pub max_lag: usize,
    /// Strength of the sparsity prior.
    pub gamma: f64,
    /// Added to the diagonal of every scatter matrix. Zero by default.
    pub jitter: f64,
    pub execution: Execution,
}

impl LearnConfig {
    pub fn new(max_lag: usize) -> Self {
        Self { max_lag, gamma: 0.5, jitter: 0.0, execution: Execution::default() }
    }

    pub fn gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub temporal: Duration,
    pub contemporaneous: Duration,
    pub fit: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub structure: GvarStructure,
    pub temporal: TemporalResult,
    /// Contemporaneous blankets before OR-symmetrisation.
    pub contemporaneous_blankets: Vec<Vec<usize>>,
    /// Per-node least-squares lag matrices used to form the residuals.
    pub ols_lag_matrices: Vec<DMatrix<f64>>,
    /// Set by [`LearnResult::fit`].
    pub fitted: Option<(GvarModel, FitDiagnostics)>,
    pub timings: Timings,
}

impl LearnResult {
    /// Estimates the constrained ML parameters for the learned structure and
    /// stores them in [`LearnResult::fitted`].
    pub fn fit(&mut self, series: &TimeSeries, delta: f64) -> Result<&(GvarModel, FitDiagnostics)> {
        let start = Instant::now();
        let fitted = crate::params::fit_parameters(series, &self.structure, &crate::params::FitConfig::new(delta))?;
        self.timings.fit = start.elapsed();
        Ok(self.fitted.insert(fitted))
    }
}

/// Learns the full GVAR structure of `series`.
///
/// Lag selection uses rows aligned to `K`; once the lag `k` is chosen, the
/// least-squares fit and the residuals use all `N - k` available rows.
pub fn learn_structure(series: &TimeSeries, config: &LearnConfig) -> Result<LearnResult> {
    let start = Instant::now();
    let temporal = learn_temporal(series, config)?;
    let temporal_time = start.elapsed();

    let start = Instant::now();
    let d = series.dim();
    let k = temporal.lag;
    let z = build_lagged_matrix(series, k, k)?;
    let coefficients: Vec<DVector<f64>> =
        config.execution.try_map(d, |i| ols_node(&z, i, &temporal.parents[i]))?;
    let ols_lag_matrices = assemble_lag_matrices(d, k, &temporal.parents, &coefficients);
    let resid = residuals(series, &ols_lag_matrices)?;
    let contemporaneous = learn_contemporaneous(&resid, config.gamma, config.jitter, config.execution)?;
    let contemporaneous_time = start.elapsed();

    let edges = temporal.parents.iter().enumerate().flat_map(|(target, ps)| {
        ps.iter().map(move |&(lag, source)| TemporalEdge { lag, source, target })
    });
    let structure = GvarStructure::new(d, k, edges, contemporaneous.edges.iter().copied())?;

    Ok(LearnResult {
        structure,
        temporal,
        contemporaneous_blankets: contemporaneous.blankets,
        ols_lag_matrices,
        fitted: None,
        timings: Timings { temporal: temporal_time, contemporaneous: contemporaneous_time, fit: Duration::ZERO },
    })
}
