//! Temporal graph learning, lag selection and lag-regression residuals.

use nalgebra::{DMatrix, DVector};

use super::greedy::greedy_markov_blanket;
use super::LearnConfig;
use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::scoring::{build_lagged_matrix, log_local_fmpl, log_prior_temporal, scatter, spd_solve, LaggedDataMatrix};

/// Learned temporal graph and the selected lag length.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalResult {
    /// Selected lag length.
    pub lag: usize,
    /// Parents of each node as `(lag, variable)` pairs in ascending column
    /// order.
    pub parents: Vec<Vec<(usize, usize)>>,
    /// Local objective (log FMPL plus log prior) of each node at the selected
    /// lag.
    pub node_scores: Vec<f64>,
    /// Total objective for `k = 1..=K`; entry `k - 1` belongs to lag `k`.
    pub objective_per_k: Vec<f64>,
}

/// Temporal search for a single lag length `k` over rows aligned to `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagFit {
    pub parents: Vec<Vec<(usize, usize)>>,
    pub node_scores: Vec<f64>,
    pub objective: f64,
}

fn temporal_prior(p: usize, d: usize, k: usize, gamma: f64) -> Result<f64> {
    // A single lagged candidate (k d = 1) has a flat prior.
    if k * d == 1 {
        return Ok(0.0);
    }
    log_prior_temporal(p, d, k, gamma)
}

/// Learns the parents of every node for lag length `k` using the lagged
/// matrix aligned to `align_to`.
pub fn learn_temporal_for_lag(series: &TimeSeries, k: usize, align_to: usize, config: &LearnConfig) -> Result<LagFit> {
    let z = build_lagged_matrix(series, k, align_to)?;
    let s = scatter(&z).with_jitter(config.jitter);
    let d = series.dim();
    let n = z.rows_effective();
    let candidates: Vec<usize> = (d..(k + 1) * d).collect();
    let gamma = config.gamma;

    let per_node = config.execution.try_map(d, |i| {
        let outcome = greedy_markov_blanket(i, &candidates, n, |b| {
            Ok(log_local_fmpl(&s, b)? + temporal_prior(b.len(), d, k, gamma)?)
        })?;
        let parents: Vec<(usize, usize)> = outcome.blanket.members().iter().map(|&c| z.lag_var(c)).collect();
        Ok::<_, Error>((parents, outcome.objective))
    })?;

    let (parents, node_scores): (Vec<_>, Vec<_>) = per_node.into_iter().unzip();
    let objective = node_scores.iter().sum();
    Ok(LagFit { parents, node_scores, objective })
}

/// Learns the temporal graph for every `k = 1..=K` and keeps the lag with the
/// largest total objective, preferring the smaller lag on ties.
pub fn learn_temporal(series: &TimeSeries, config: &LearnConfig) -> Result<TemporalResult> {
    let max_lag = config.max_lag;
    if max_lag == 0 {
        return Err(Error::InvalidArgument("maximum lag must be at least 1".into()));
    }
    if series.len() < max_lag + 2 {
        return Err(Error::InvalidArgument(format!(
            "series of length {} is too short for maximum lag {max_lag}",
            series.len()
        )));
    }

    let mut best: Option<(usize, LagFit)> = None;
    let mut objective_per_k = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let fit = learn_temporal_for_lag(series, k, max_lag, config)?;
        objective_per_k.push(fit.objective);
        if best.as_ref().is_none_or(|(_, b)| fit.objective > b.objective) {
            best = Some((k, fit));
        }
    }
    let (lag, fit) = best.expect("at least one lag evaluated");
    Ok(TemporalResult { lag, parents: fit.parents, node_scores: fit.node_scores, objective_per_k })
}

/// Least-squares coefficients of lag-0 column `node` on the given
/// `(lag, variable)` parent columns, in parent order.
pub fn ols_node(z: &LaggedDataMatrix, node: usize, parents: &[(usize, usize)]) -> Result<DVector<f64>> {
    if parents.is_empty() {
        return Ok(DVector::zeros(0));
    }
    if parents.len() > z.rows_effective().saturating_sub(1) {
        return Err(Error::InvalidArgument(format!(
            "node {node} has {} parents but only {} rows",
            parents.len(),
            z.rows_effective()
        )));
    }
    if let Some(&(lag, var)) = parents.iter().find(|&&(lag, var)| lag == 0 || lag > z.lag() || var >= z.dim()) {
        return Err(Error::InvalidArgument(format!("parent (lag {lag}, variable {var}) out of range")));
    }
    let values = z.values();
    let x = DMatrix::from_fn(values.nrows(), parents.len(), |r, c| {
        let (lag, var) = parents[c];
        values[(r, z.column(lag, var))]
    });
    let y = values.column(node);
    let gram = x.tr_mul(&x);
    let rhs = x.tr_mul(&y);
    spd_solve(&gram, &rhs)
        .ok_or_else(|| Error::SingularDesign(format!("parents of node {node} are linearly dependent")))
}

/// Lag matrices with the given per-node parent coefficients and zeros
/// elsewhere.
pub fn assemble_lag_matrices(
    d: usize,
    k: usize,
    parents: &[Vec<(usize, usize)>],
    coefficients: &[DVector<f64>],
) -> Vec<DMatrix<f64>> {
    let mut lags = vec![DMatrix::zeros(d, d); k];
    for (target, (ps, coefs)) in parents.iter().zip(coefficients).enumerate() {
        for (&(lag, source), &c) in ps.iter().zip(coefs.iter()) {
            lags[lag - 1][(target, source)] = c;
        }
    }
    lags
}

/// Residuals `y_t - sum_m A_m y_{t-m}` for `t = k+1..N`.
pub fn residuals(series: &TimeSeries, lag_matrices: &[DMatrix<f64>]) -> Result<TimeSeries> {
    let k = lag_matrices.len();
    let d = series.dim();
    if lag_matrices.iter().any(|a| a.shape() != (d, d)) {
        return Err(Error::DimensionMismatch { expected: d, found: lag_matrices[0].nrows() });
    }
    if k + 2 > series.len() {
        return Err(Error::InvalidArgument(format!(
            "lag length {k} leaves fewer than 2 residuals from {} observations",
            series.len()
        )));
    }
    let y = series.values();
    let mut out = y.rows(k, series.len() - k).into_owned();
    for (m, a) in lag_matrices.iter().enumerate() {
        let lagged = y.rows(k - m - 1, series.len() - k);
        // rows: e_t^T -= y_{t-m}^T A_m^T
        out.gemm(-1.0, &lagged, &a.transpose(), 1.0);
    }
    TimeSeries::new(out)
}
