//! Domain types for graphical VAR models and structures.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// An `N x d` multivariate time series. Rows are time steps in increasing
/// order, columns are variables.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: DMatrix<f64>,
    names: Option<Vec<String>>,
}

impl TimeSeries {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::InvalidArgument(format!(
                "time series needs at least 2 observations, got {}",
                values.nrows()
            )));
        }
        if values.ncols() == 0 {
            return Err(Error::InvalidArgument("time series has no variables".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::InvalidArgument(format!(
                "non-finite value at row {row}, column {col}"
            )));
        }
        Ok(Self { values, names: None })
    }

    /// Builds a series from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidArgument(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |t, j| rows[t][j]))
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: names.len() });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Number of time steps `N`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Number of variables `d`.
    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// Observation at time `t` (0-based).
    pub fn row(&self, t: usize) -> DVector<f64> {
        self.values.row(t).transpose()
    }

    /// Subtracts the column means, returning the centred series and the means.
    pub fn centered(&self) -> (TimeSeries, DVector<f64>) {
        let means = self.values.row_mean().transpose();
        let mut values = self.values.clone();
        for (j, mut col) in values.column_iter_mut().enumerate() {
            col.add_scalar_mut(-means[j]);
        }
        (Self { values, names: self.names.clone() }, means)
    }

    /// The contiguous sub-series of rows `start..end`.
    pub fn window(&self, start: usize, end: usize) -> Result<TimeSeries> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "window {start}..{end} out of range for series of length {}",
                self.len()
            )));
        }
        let values = self.values.rows(start, end - start).into_owned();
        let mut out = TimeSeries::new(values)?;
        out.names = self.names.clone();
        Ok(out)
    }
}

/// A Gaussian VAR(k) model `y_t = sum_m A_m y_{t-m} + e_t`, `e_t ~ N(0, Omega^-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GvarModel {
    lag_matrices: Vec<DMatrix<f64>>,
    precision: DMatrix<f64>,
}

impl GvarModel {
    /// Validates the shapes and the precision matrix. The precision matrix is
    /// symmetrised by averaging with its transpose when it is symmetric to
    /// within `1e-12`.
    pub fn new(lag_matrices: Vec<DMatrix<f64>>, precision: DMatrix<f64>) -> Result<Self> {
        if lag_matrices.is_empty() {
            return Err(Error::InvalidArgument("a VAR model needs at least one lag".into()));
        }
        let d = precision.nrows();
        if d == 0 || precision.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "precision matrix must be square and nonempty, got {}x{}",
                precision.nrows(),
                precision.ncols()
            )));
        }
        for a in &lag_matrices {
            if a.nrows() != d || a.ncols() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.nrows().max(a.ncols()) });
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("lag matrix has non-finite entries".into()));
            }
        }
        let asym = (&precision - precision.transpose()).amax();
        if !asym.is_finite() || asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "precision matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        let precision = (&precision + precision.transpose()) * 0.5;
        if precision.clone().cholesky().is_none() {
            return Err(Error::InvalidArgument("precision matrix is not positive definite".into()));
        }
        Ok(Self { lag_matrices, precision })
    }

    pub fn dim(&self) -> usize {
        self.precision.nrows()
    }

    pub fn lag(&self) -> usize {
        self.lag_matrices.len()
    }

    pub fn lag_matrices(&self) -> &[DMatrix<f64>] {
        &self.lag_matrices
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Innovation covariance `Omega^-1`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let chol = self.precision.clone().cholesky().expect("precision is positive definite");
        let cov = chol.inverse();
        (&cov + cov.transpose()) * 0.5
    }

    /// The sparsity pattern of the model: nonzero lag coefficients and nonzero
    /// precision off-diagonals.
    pub fn structure(&self) -> GvarStructure {
        let d = self.dim();
        let mut temporal = BTreeSet::new();
        for (m, a) in self.lag_matrices.iter().enumerate() {
            for target in 0..d {
                for source in 0..d {
                    if a[(target, source)] != 0.0 {
                        temporal.insert(TemporalEdge { lag: m + 1, source, target });
                    }
                }
            }
        }
        let mut contemporaneous = BTreeSet::new();
        for a in 0..d {
            for b in a + 1..d {
                if self.precision[(a, b)] != 0.0 {
                    contemporaneous.insert((a, b));
                }
            }
        }
        GvarStructure { d, k: self.lag(), temporal, contemporaneous }
    }

    /// One-step prediction of `y_t` given `past[m] = y_{t-1-m}`.
    pub fn predict(&self, past: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for (a, y) in self.lag_matrices.iter().zip(past) {
            out.gemv(1.0, a, y, 1.0);
        }
        out
    }
}

/// A directed edge from variable `source` at lag `lag` to variable `target`
/// at the reference time step. Variables are 0-based, lags start at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalEdge {
    pub lag: usize,
    pub source: usize,
    pub target: usize,
}

/// The pair of a temporal lag graph and an undirected contemporaneous graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GvarStructure {
    d: usize,
    k: usize,
    temporal: BTreeSet<TemporalEdge>,
    /// Stored as `(a, b)` with `a < b`.
    contemporaneous: BTreeSet<(usize, usize)>,
}

impl GvarStructure {
    pub fn new(
        d: usize,
        k: usize,
        temporal: impl IntoIterator<Item = TemporalEdge>,
        contemporaneous: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::InvalidArgument(format!("structure needs d >= 1 and k >= 1, got d={d}, k={k}")));
        }
        let mut t_set = BTreeSet::new();
        for e in temporal {
            if e.lag == 0 || e.lag > k || e.source >= d || e.target >= d {
                return Err(Error::InvalidArgument(format!("temporal edge {e:?} out of range")));
            }
            t_set.insert(e);
        }
        let mut c_set = BTreeSet::new();
        for (a, b) in contemporaneous {
            if a == b || a >= d || b >= d {
                return Err(Error::InvalidArgument(format!("contemporaneous edge ({a}, {b}) is invalid")));
            }
            c_set.insert((a.min(b), a.max(b)));
        }
        Ok(Self { d, k, temporal: t_set, contemporaneous: c_set })
    }

    pub fn empty(d: usize, k: usize) -> Result<Self> {
        Self::new(d, k, [], [])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lag(&self) -> usize {
        self.k
    }

    pub fn temporal_edges(&self) -> &BTreeSet<TemporalEdge> {
        &self.temporal
    }

    pub fn contemporaneous_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.contemporaneous
    }

    /// Parents of `target` as `(lag, source)` pairs, ordered by lag then source.
    pub fn parents(&self, target: usize) -> Vec<(usize, usize)> {
        self.temporal
            .iter()
            .filter(|e| e.target == target)
            .map(|e| (e.lag, e.source))
            .collect()
    }

    pub fn neighbors(&self, node: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .contemporaneous
            .iter()
            .filter_map(|&(a, b)| if a == node { Some(b) } else if b == node { Some(a) } else { None })
            .collect();
        out.sort_unstable();
        out
    }

    pub fn has_contemporaneous(&self, a: usize, b: usize) -> bool {
        self.contemporaneous.contains(&(a.min(b), a.max(b)))
    }
}

/// Stacked VAR(1) form of a VAR(k): the top block row holds `[A_1 ... A_k]`,
/// identity blocks sit on the block subdiagonal.
pub fn companion_matrix(model: &GvarModel) -> DMatrix<f64> {
    companion_from_lags(model.lag_matrices())
}

pub(crate) fn companion_from_lags(lags: &[DMatrix<f64>]) -> DMatrix<f64> {
    let d = lags[0].nrows();
    let kd = d * lags.len();
    let mut c = DMatrix::zeros(kd, kd);
    for (m, a) in lags.iter().enumerate() {
        c.view_mut((0, m * d), (d, d)).copy_from(a);
    }
    for i in d..kd {
        c[(i, i - d)] = 1.0;
    }
    c
}

/// Largest eigenvalue modulus of the companion matrix.
pub fn spectral_radius(model: &GvarModel) -> f64 {
    spectral_radius_of_lags(model.lag_matrices())
}

pub(crate) fn spectral_radius_of_lags(lags: &[DMatrix<f64>]) -> f64 {
    let c = companion_from_lags(lags);
    match Schur::try_new(c.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        None => gelfand_radius(c),
    }
}

/// `lim ||C^p||^(1/p)` by repeated squaring, for matrices where the Schur
/// iteration stalls (nilpotent companion matrices in particular).
fn gelfand_radius(mut m: DMatrix<f64>) -> f64 {
    // invariant: C^(2^j) = exp(log_scale) * m
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..48 {
        let norm = m.norm();
        if norm == 0.0 {
            return 0.0;
        }
        m /= norm;
        log_scale += norm.ln();
        m = &m * &m;
        log_scale *= 2.0;
        power *= 2.0;
    }
    ((log_scale + m.norm().ln()) / power).exp()
}

/// True iff the companion spectral radius is below `1 - margin`.
pub fn is_stable(model: &GvarModel, margin: f64) -> bool {
    spectral_radius(model) < 1.0 - margin
}

/// Result of removing a per-variable linear time trend.
#[derive(Debug, Clone)]
pub struct Detrended {
    pub series: TimeSeries,
    pub slope: DVector<f64>,
    pub intercept: DVector<f64>,
}

/// Fits `y_t = b t + c` per column by least squares over `t = 1..N` and
/// returns the residual series together with the fitted slopes and intercepts.
pub fn detrend(series: &TimeSeries) -> Detrended {
    let n = series.len();
    let d = series.dim();
    let nf = n as f64;
    let t_mean = (nf + 1.0) / 2.0;
    // sum over t of (t - t_mean)^2 = N (N^2 - 1) / 12
    let t_ss = nf * (nf * nf - 1.0) / 12.0;
    let values = series.values();
    let mut slope = DVector::zeros(d);
    let mut intercept = DVector::zeros(d);
    let mut out = values.clone();
    for j in 0..d {
        let col = values.column(j);
        let y_mean = col.mean();
        let cross: f64 = col
            .iter()
            .enumerate()
            .map(|(t, y)| (t as f64 + 1.0 - t_mean) * (y - y_mean))
            .sum();
        let b = cross / t_ss;
        let c = y_mean - b * t_mean;
        for t in 0..n {
            out[(t, j)] = values[(t, j)] - b * (t as f64 + 1.0) - c;
        }
        slope[j] = b;
        intercept[j] = c;
    }
    Detrended {
        series: TimeSeries { values: out, names: series.names.clone() },
        slope,
        intercept,
    }
}
