//! Maximum likelihood estimation of the lag matrices and the precision matrix
//! under a fixed sparsity pattern.
//!
//! The estimator alternates two conditional maximisations of the Gaussian
//! likelihood:
//!
//! 1. Given `Omega`, the free lag coefficients solve the generalized least
//!    squares normal equations `(R^T (G kron Omega) R) beta = R^T vec(Omega C)`
//!    with `G = X^T X`, `C = Y^T X` and `R` the selection matrix of
//!    structure-permitted coefficients.
//! 2. Given the lag matrices, `Omega` is the Gaussian MLE of the residual
//!    covariance with zeros outside the contemporaneous pattern, computed by
//!    the regression-based iteration for graphs of known structure.
//!
//! Each step cannot lower the likelihood, so the recorded trajectory is
//! non-decreasing. Covariances use the `1/n` normalisation throughout.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{GvarModel, GvarStructure, TimeSeries};
use crate::scoring::{build_lagged_matrix, spd_solve, LaggedDataMatrix};
use crate::search::residuals;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Stop once the log-likelihood changes by less than this.
    pub delta: f64,
    pub max_iterations: usize,
    /// Max entry change that ends the inner precision-matrix iteration.
    pub omega_tolerance: f64,
    pub omega_max_iterations: usize,
}

impl FitConfig {
    pub fn new(delta: f64) -> Self {
        Self { delta, max_iterations: 100, omega_tolerance: 1e-8, omega_max_iterations: 10_000 }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self::new(1e-6)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// Maximised Gaussian log-likelihood of `Omega` after each iteration.
    pub loglik_trajectory: Vec<f64>,
    pub converged: bool,
    /// Absolute change of the last two log-likelihood values (infinite after a
    /// single iteration).
    pub final_difference: f64,
}

/// GLS estimate of the structure-permitted lag coefficients given `omega`.
/// Entries outside the structure are exactly zero.
pub fn estimate_lag_matrices_given_omega(
    z: &LaggedDataMatrix,
    structure: &GvarStructure,
    omega: &DMatrix<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    let d = z.dim();
    let k = structure.lag();
    if structure.dim() != d || omega.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: structure.dim() });
    }
    if z.lag() < k {
        return Err(Error::InvalidArgument(format!("lagged matrix has {} lags, structure needs {k}", z.lag())));
    }

    // free coefficients ordered by equation (target), then parent order
    let free: Vec<(usize, usize)> = (0..d)
        .flat_map(|r| structure.parents(r).into_iter().map(move |(lag, src)| (r, (lag - 1) * d + src)))
        .collect();
    let mut lags = vec![DMatrix::zeros(d, d); k];
    if free.is_empty() {
        return Ok(lags);
    }
    if free.len() >= z.rows_effective() * d {
        return Err(Error::SingularDesign(format!(
            "{} free coefficients exceed the {} available observations",
            free.len(),
            z.rows_effective() * d
        )));
    }

    let values = z.values();
    let y = values.columns(0, d);
    let x = values.columns(d, k * d);
    let gram = x.tr_mul(&x);
    let cross = y.tr_mul(&x); // C = Y^T X, d x kd
    let weighted = omega * &cross;

    let m = free.len();
    let mut normal = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for (a, &(ra, ca)) in free.iter().enumerate() {
        rhs[a] = weighted[(ra, ca)];
        for (b, &(rb, cb)) in free.iter().enumerate().take(a + 1) {
            let v = gram[(ca, cb)] * omega[(ra, rb)];
            normal[(a, b)] = v;
            normal[(b, a)] = v;
        }
    }
    let beta = spd_solve(&normal, &rhs)
        .ok_or_else(|| Error::SingularDesign("GLS normal equations are singular".into()))?;

    for (&(r, c), &v) in free.iter().zip(beta.iter()) {
        lags[c / d][(r, c % d)] = v;
    }
    Ok(lags)
}

/// Gaussian MLE of the precision matrix of `resid` with zeros at every
/// non-edge of `edges`.
pub fn estimate_omega_given_pattern(resid: &TimeSeries, edges: &BTreeSet<(usize, usize)>) -> Result<DMatrix<f64>> {
    let cfg = FitConfig::default();
    let w = sample_covariance(resid);
    constrained_precision(&w, &neighbor_lists(resid.dim(), edges)?, cfg.omega_tolerance, cfg.omega_max_iterations)
}

/// `Z^T Z / n` of a zero-mean series.
pub fn sample_covariance(series: &TimeSeries) -> DMatrix<f64> {
    let v = series.values();
    let w = v.tr_mul(v) / v.nrows() as f64;
    (&w + w.transpose()) * 0.5
}

pub(crate) fn neighbor_lists(d: usize, edges: &BTreeSet<(usize, usize)>) -> Result<Vec<Vec<usize>>> {
    let mut nb = vec![Vec::new(); d];
    for &(a, b) in edges {
        if a == b || a >= d || b >= d {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) invalid for dimension {d}")));
        }
        nb[a].push(b);
        nb[b].push(a);
    }
    for list in nb.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    Ok(nb)
}

/// Maximises `log det Omega - tr(W Omega)` subject to `Omega_ab = 0` for every
/// pair not listed in `neighbors`.
///
/// Iterates the covariance estimate `V` column by column: for column `j`,
/// solve `V[nb, nb] beta = W[nb, j]` over the neighbours of `j`, then set the
/// off-diagonal column to `V[., nb] beta`. At the fixed point `V = Omega^-1`
/// agrees with `W` on the diagonal and on every edge.
pub fn constrained_precision(
    w: &DMatrix<f64>,
    neighbors: &[Vec<usize>],
    tolerance: f64,
    max_iterations: usize,
) -> Result<DMatrix<f64>> {
    let d = w.nrows();
    if w.ncols() != d || neighbors.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: neighbors.len() });
    }
    if w.clone().cholesky().is_none() {
        return Err(Error::DegenerateResiduals("residual covariance is not positive definite".into()));
    }

    let solve_column = |v: &DMatrix<f64>, j: usize| -> Result<DVector<f64>> {
        let nb = &neighbors[j];
        let sub = DMatrix::from_fn(nb.len(), nb.len(), |a, b| v[(nb[a], nb[b])]);
        let rhs = DVector::from_fn(nb.len(), |a, _| w[(nb[a], j)]);
        sub.cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::DegenerateResiduals(format!("covariance block of node {j} lost definiteness")))
    };

    let mut v = w.clone();
    let mut converged = neighbors.iter().all(Vec::is_empty);
    if converged {
        v = DMatrix::from_diagonal(&w.diagonal());
    }
    for _ in 0..max_iterations {
        if converged {
            break;
        }
        let mut change: f64 = 0.0;
        for j in 0..d {
            let nb = &neighbors[j];
            let beta = solve_column(&v, j)?;
            for i in (0..d).filter(|&i| i != j) {
                let new: f64 = nb.iter().zip(beta.iter()).map(|(&l, &b)| v[(i, l)] * b).sum();
                change = change.max((new - v[(i, j)]).abs());
                v[(i, j)] = new;
                v[(j, i)] = new;
            }
        }
        converged = change < tolerance;
    }
    if !converged {
        return Err(Error::DegenerateResiduals(format!(
            "precision estimate did not converge in {max_iterations} iterations"
        )));
    }

    let mut omega = DMatrix::zeros(d, d);
    for j in 0..d {
        let nb = &neighbors[j];
        let beta = solve_column(&v, j)?;
        let explained: f64 = nb.iter().zip(beta.iter()).map(|(&l, &b)| v[(l, j)] * b).sum();
        let theta = 1.0 / (w[(j, j)] - explained);
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::DegenerateResiduals(format!("non-positive conditional variance for node {j}")));
        }
        omega[(j, j)] = theta;
        for (&l, &b) in nb.iter().zip(beta.iter()) {
            omega[(l, j)] = -b * theta;
        }
    }
    Ok((&omega + omega.transpose()) * 0.5)
}

/// Gaussian log-likelihood `n/2 (log det Omega - tr(W Omega) - d log 2 pi)`.
pub fn gaussian_loglik(w: &DMatrix<f64>, omega: &DMatrix<f64>, n: usize) -> Result<f64> {
    let chol = omega
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateResiduals("precision estimate is not positive definite".into()))?;
    let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let trace = w.component_mul(omega).sum();
    let d = w.nrows() as f64;
    Ok(n as f64 / 2.0 * (logdet - trace - d * (2.0 * std::f64::consts::PI).ln()))
}

/// Alternates the constrained lag-matrix and precision-matrix estimates,
/// starting from `Omega = I`, until the log-likelihood of `Omega` changes by
/// less than `config.delta`.
///
/// Hitting `max_iterations` is not an error: the best model so far is
/// returned with `converged = false`.
pub fn fit_parameters(
    series: &TimeSeries,
    structure: &GvarStructure,
    config: &FitConfig,
) -> Result<(GvarModel, FitDiagnostics)> {
    let d = series.dim();
    let k = structure.lag();
    if structure.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: structure.dim() });
    }
    if series.len() < k + d + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least {} observations for d={d}, k={k}, got {}",
            k + d + 1,
            series.len()
        )));
    }
    let z = build_lagged_matrix(series, k, k)?;
    let neighbors = neighbor_lists(d, structure.contemporaneous_edges())?;

    let mut omega = DMatrix::identity(d, d);
    let mut trajectory: Vec<f64> = Vec::new();
    let mut best: Option<(f64, Vec<DMatrix<f64>>, DMatrix<f64>)> = None;
    let mut converged = false;
    let mut final_difference = f64::INFINITY;

    for _ in 0..config.max_iterations {
        let lags = estimate_lag_matrices_given_omega(&z, structure, &omega)?;
        let resid = residuals(series, &lags)?;
        let w = sample_covariance(&resid);
        omega = constrained_precision(&w, &neighbors, config.omega_tolerance, config.omega_max_iterations)?;
        let ll = gaussian_loglik(&w, &omega, resid.len())?;
        if let Some(&prev) = trajectory.last() {
            final_difference = (ll - prev).abs();
        }
        trajectory.push(ll);
        if best.as_ref().is_none_or(|(b, _, _)| ll >= *b) {
            best = Some((ll, lags, omega.clone()));
        }
        if final_difference < config.delta {
            converged = true;
            break;
        }
    }

    let (_, lags, omega) = best.ok_or_else(|| Error::InvalidArgument("max_iterations must be at least 1".into()))?;
    let model = GvarModel::new(lags, omega)?;
    let diagnostics =
        FitDiagnostics { iterations: trajectory.len(), loglik_trajectory: trajectory, converged, final_difference };
    Ok((model, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::ols_node;
    use crate::simulate::{draw_series, example_var2};

    fn pattern(d: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
        neighbor_lists(d, &edges.iter().copied().collect()).unwrap()
    }

    fn random_cov(d: usize, seed: u64) -> DMatrix<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(3 * d, d, |_, _| rng.random_range(-1.0..1.0));
        x.tr_mul(&x) / (3 * d) as f64
    }

    #[test]
    fn dense_pattern_is_the_inverse() {
        let w = random_cov(5, 1);
        let all: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        let omega = constrained_precision(&w, &pattern(5, &all), 1e-10, 1000).unwrap();
        let inv = w.clone().try_inverse().unwrap();
        assert!((omega - inv).amax() < 1e-8);
    }

    #[test]
    fn empty_pattern_is_diagonal() {
        let w = random_cov(4, 2);
        let omega = constrained_precision(&w, &pattern(4, &[]), 1e-8, 1000).unwrap();
        for a in 0..4 {
            assert_eq!(omega[(a, a)], 1.0 / w[(a, a)]);
            for b in 0..4 {
                if a != b {
                    assert_eq!(omega[(a, b)], 0.0);
                }
            }
        }
    }

    #[test]
    fn sparse_pattern_is_stationary_and_exactly_zero() {
        let w = random_cov(6, 3);
        let edges = [(0, 1), (1, 2), (2, 5), (3, 4)];
        let omega = constrained_precision(&w, &pattern(6, &edges), 1e-8, 1000).unwrap();
        let inv = omega.clone().try_inverse().unwrap();
        for a in 0..6 {
            assert!((inv[(a, a)] - w[(a, a)]).abs() < 1e-6);
            for b in a + 1..6 {
                if edges.contains(&(a, b)) {
                    assert!((inv[(a, b)] - w[(a, b)]).abs() < 1e-6);
                } else {
                    assert_eq!(omega[(a, b)], 0.0);
                }
            }
        }
        assert!(omega.cholesky().is_some());
    }

    #[test]
    fn non_spd_covariance_is_degenerate() {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(constrained_precision(&w, &pattern(2, &[]), 1e-8, 10), Err(Error::DegenerateResiduals(_))));
    }

    #[test]
    fn identity_weight_dense_gls_equals_ols() {
        let m = example_var2();
        let y = draw_series(&m, 400, 100, 5).unwrap();
        let z = build_lagged_matrix(&y, 2, 2).unwrap();
        let edges = (1..=2).flat_map(|lag| {
            (0..4).flat_map(move |t| (0..4).map(move |s| crate::TemporalEdge { lag, source: s, target: t }))
        });
        let dense = GvarStructure::new(4, 2, edges, []).unwrap();
        let lags = estimate_lag_matrices_given_omega(&z, &dense, &DMatrix::identity(4, 4)).unwrap();
        for t in 0..4 {
            let parents = dense.parents(t);
            let beta = ols_node(&z, t, &parents).unwrap();
            for (&(lag, s), b) in parents.iter().zip(beta.iter()) {
                assert!((lags[lag - 1][(t, s)] - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_structure_fit() {
        let m = example_var2();
        let y = draw_series(&m, 300, 100, 6).unwrap();
        let empty = GvarStructure::empty(4, 2).unwrap();
        let (fit, diag) = fit_parameters(&y, &empty, &FitConfig::default()).unwrap();
        assert!(fit.lag_matrices().iter().all(|a| a.iter().all(|&v| v == 0.0)));
        let resid = residuals(&y, &[DMatrix::zeros(4, 4), DMatrix::zeros(4, 4)]).unwrap();
        let w = sample_covariance(&resid);
        for a in 0..4 {
            assert!((fit.precision()[(a, a)] - 1.0 / w[(a, a)]).abs() < 1e-12);
        }
        assert!(diag.converged);
        assert_eq!(diag.final_difference, 0.0);
        assert_eq!(diag.iterations, 2);
    }

    #[test]
    fn fit_preserves_zero_pattern() {
        let m = example_var2();
        let y = draw_series(&m, 1000, 100, 7).unwrap();
        let truth = m.structure();
        let (fit, diag) = fit_parameters(&y, &truth, &FitConfig::default()).unwrap();
        assert_eq!(fit.structure().temporal_edges(), truth.temporal_edges());
        let s = fit.structure();
        assert!(s.contemporaneous_edges().is_subset(truth.contemporaneous_edges()));
        assert!(diag.converged);
        assert!(diag.loglik_trajectory.windows(2).all(|p| p[1] >= p[0] - 1e-9));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let y = draw_series(&example_var2(), 100, 10, 1).unwrap();
        let s = GvarStructure::empty(3, 1).unwrap();
        assert!(matches!(fit_parameters(&y, &s, &FitConfig::default()), Err(Error::DimensionMismatch { .. })));
    }
}
