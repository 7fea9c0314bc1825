//! Lagged data matrices, scatter matrices and the fractional marginal
//! pseudo-likelihood (FMPL) node scores.
//!
//! All scores are returned in the log domain. The gamma-function ratio is
//! evaluated with `lgamma`, so sample sizes far beyond the range where
//! `Gamma(n/2)` overflows are handled.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// The matrix `Z = [Y_0 Y_-1 ... Y_-k]`. Variable `m` at lag `l` occupies
/// column `l * d + m` (both 0-based; lag 0 is the first block of `d`
/// columns).
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDataMatrix {
    values: DMatrix<f64>,
    d: usize,
    k: usize,
}

impl LaggedDataMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lag(&self) -> usize {
        self.k
    }

    pub fn rows_effective(&self) -> usize {
        self.values.nrows()
    }

    /// Column index of variable `var` at lag `lag`.
    pub fn column(&self, lag: usize, var: usize) -> usize {
        lag * self.d + var
    }

    /// Inverse of [`LaggedDataMatrix::column`]: `(lag, var)`.
    pub fn lag_var(&self, column: usize) -> (usize, usize) {
        (column / self.d, column % self.d)
    }
}

/// Builds the lagged matrix for lag length `k` using rows `t = K+1..N` where
/// `K = align_to`. Aligning to the largest lag under consideration gives every
/// `k <= K` the same `N - K` rows.
pub fn build_lagged_matrix(series: &TimeSeries, k: usize, align_to: usize) -> Result<LaggedDataMatrix> {
    let n = series.len();
    if k == 0 || k > align_to {
        return Err(Error::InvalidArgument(format!(
            "lag length must satisfy 1 <= k <= K, got k={k}, K={align_to}"
        )));
    }
    if align_to >= n {
        return Err(Error::InvalidArgument(format!(
            "maximum lag {align_to} must be smaller than the series length {n}"
        )));
    }
    let d = series.dim();
    let y = series.values();
    let rows = n - align_to;
    let values = DMatrix::from_fn(rows, (k + 1) * d, |r, c| {
        let (lag, var) = (c / d, c % d);
        y[(r + align_to - lag, var)]
    });
    Ok(LaggedDataMatrix { values, d, k })
}

/// Unscaled cross-product matrix `S = Z^T Z` and the number of rows it was
/// formed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterMatrix {
    s: DMatrix<f64>,
    n: usize,
}

impl ScatterMatrix {
    pub fn from_data(data: &DMatrix<f64>) -> Self {
        let s = data.tr_mul(data);
        let s = (&s + s.transpose()) * 0.5;
        Self { s, n: data.nrows() }
    }

    /// Wraps a precomputed cross-product matrix formed from `n` rows.
    pub fn from_matrix(s: DMatrix<f64>, n: usize) -> Result<Self> {
        if s.nrows() != s.ncols() {
            return Err(Error::InvalidArgument(format!("scatter matrix must be square, got {}x{}", s.nrows(), s.ncols())));
        }
        if (&s - s.transpose()).amax() > 0.0 {
            return Err(Error::InvalidArgument("scatter matrix must be symmetric".into()));
        }
        Ok(Self { s, n })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Adds `jitter` to every diagonal entry.
    pub fn with_jitter(mut self, jitter: f64) -> Self {
        if jitter != 0.0 {
            for i in 0..self.s.nrows() {
                self.s[(i, i)] += jitter;
            }
        }
        self
    }

    /// `log |S_idx|` from a Cholesky factorisation, with `log |S_{}| = 0`.
    /// Returns `None` when the submatrix is not positive definite.
    pub fn logdet(&self, idx: &[usize]) -> Option<f64> {
        let p = idx.len();
        let mut buf = Vec::with_capacity(p * p);
        for &a in idx {
            for &b in idx {
                buf.push(self.s[(a, b)]);
            }
        }
        cholesky_logdet(&mut buf, p)
    }
}

pub fn scatter(z: &LaggedDataMatrix) -> ScatterMatrix {
    ScatterMatrix::from_data(&z.values)
}

/// Pivots below this fraction of the original diagonal entry are treated as
/// exact linear dependence.
const PIVOT_TOL: f64 = 1e-12;

/// In-place lower Cholesky of a row-major `p x p` SPD matrix, returning the
/// log-determinant. Fails on numerically singular input.
pub(crate) fn cholesky_logdet(a: &mut [f64], p: usize) -> Option<f64> {
    let mut logdet = 0.0;
    for j in 0..p {
        let original = a[j * p + j];
        let mut diag = original;
        for k in 0..j {
            diag -= a[j * p + k] * a[j * p + k];
        }
        if !(diag > PIVOT_TOL * original) || !diag.is_finite() {
            return None;
        }
        let l_jj = diag.sqrt();
        a[j * p + j] = l_jj;
        logdet += diag.ln();
        for i in j + 1..p {
            let mut v = a[i * p + j];
            for k in 0..j {
                v -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = v / l_jj;
        }
    }
    Some(logdet)
}

/// Solves `a x = b` for SPD `a`, or `None` when `a` is numerically singular.
pub(crate) fn spd_solve(a: &DMatrix<f64>, b: &nalgebra::DVector<f64>) -> Option<nalgebra::DVector<f64>> {
    let p = a.nrows();
    let mut buf: Vec<f64> = a.transpose().iter().copied().collect();
    cholesky_logdet(&mut buf, p)?;
    // forward then backward substitution with the row-major factor
    let mut x = b.clone();
    for i in 0..p {
        let mut v = x[i];
        for k in 0..i {
            v -= buf[i * p + k] * x[k];
        }
        x[i] = v / buf[i * p + i];
    }
    for i in (0..p).rev() {
        let mut v = x[i];
        for k in i + 1..p {
            v -= buf[k * p + i] * x[k];
        }
        x[i] = v / buf[i * p + i];
    }
    Some(x)
}

/// Candidate Markov blanket of `target`: column indices into a scatter matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarkovBlanket {
    target: usize,
    members: Vec<usize>,
}

impl MarkovBlanket {
    pub fn new(target: usize, mut members: Vec<usize>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.contains(&target) {
            return Err(Error::InvalidArgument(format!("node {target} cannot be in its own blanket")));
        }
        Ok(Self { target, members })
    }

    pub fn empty(target: usize) -> Self {
        Self { target, members: Vec::new() }
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.members.binary_search(&j).is_ok()
    }

    pub(crate) fn with(&self, j: usize) -> Self {
        let mut members = self.members.clone();
        if let Err(pos) = members.binary_search(&j) {
            members.insert(pos, j);
        }
        Self { target: self.target, members }
    }

    pub(crate) fn without(&self, j: usize) -> Self {
        Self { target: self.target, members: self.members.iter().copied().filter(|&m| m != j).collect() }
    }
}

/// The constant part of the local score, i.e. everything except the
/// determinant ratio.
fn log_fmpl_constant(n: f64, p: f64) -> f64 {
    -(n - 1.0) / 2.0 * std::f64::consts::PI.ln() + libm::lgamma((n + p) / 2.0)
        - libm::lgamma((p + 1.0) / 2.0)
        - (2.0 * p + 1.0) / 2.0 * n.ln()
}

/// Log local FMPL of `blanket.target()` given its blanket, with the
/// effective sample size taken from the scatter matrix.
///
/// Used with the lagged scatter matrix (`n = N - K`) for the temporal graph
/// and with the residual scatter matrix (`n = N - k`) for the contemporaneous
/// graph.
pub fn log_local_fmpl(s: &ScatterMatrix, blanket: &MarkovBlanket) -> Result<f64> {
    log_local_fmpl_with_n(s, blanket, s.n)
}

/// As [`log_local_fmpl`] with an explicit effective sample count.
pub fn log_local_fmpl_with_n(s: &ScatterMatrix, blanket: &MarkovBlanket, n: usize) -> Result<f64> {
    let dim = s.s.nrows();
    let i = blanket.target;
    if i >= dim || blanket.members.iter().any(|&m| m >= dim) {
        return Err(Error::InvalidArgument(format!(
            "blanket of node {i} indexes outside a {dim}x{dim} scatter matrix"
        )));
    }
    let p = blanket.len();
    if n == 0 || p + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "blanket of size {p} needs at least {} samples, got {n}",
            p + 1
        )));
    }
    let singular = || Error::SingularScatter { node: i, blanket: blanket.members.clone() };
    let logdet_mb = s.logdet(&blanket.members).ok_or_else(singular)?;
    let family = blanket.with_family();
    let logdet_fa = s.logdet(&family).ok_or_else(singular)?;
    let nf = n as f64;
    Ok(log_fmpl_constant(nf, p as f64) - (nf - 1.0) / 2.0 * (logdet_fa - logdet_mb))
}

impl MarkovBlanket {
    fn with_family(&self) -> Vec<usize> {
        let mut fa = Vec::with_capacity(self.members.len() + 1);
        fa.extend_from_slice(&self.members);
        fa.push(self.target);
        fa
    }
}

/// Log structure prior of one temporal blanket: `-gamma * p * ln(k d)`.
pub fn log_prior_temporal(p: usize, d: usize, k: usize, gamma: f64) -> Result<f64> {
    if d == 0 || k == 0 || k * d < 2 {
        return Err(Error::InvalidArgument(format!("temporal prior needs k*d >= 2, got k={k}, d={d}")));
    }
    check_gamma(gamma)?;
    Ok(-gamma * p as f64 * ((k * d) as f64).ln())
}

/// Log structure prior of one contemporaneous blanket: `-gamma * p * ln(d - 1)`.
/// For `d = 2` the base is 1 and the prior is flat.
pub fn log_prior_contemporaneous(p: usize, d: usize, gamma: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("contemporaneous prior needs d >= 2, got d={d}")));
    }
    check_gamma(gamma)?;
    Ok(-gamma * p as f64 * ((d - 1) as f64).ln())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    Ok(())
}
