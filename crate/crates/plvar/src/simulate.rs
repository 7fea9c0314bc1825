//! Random sparse GVAR models and time series drawn from them.
//!
//! All randomness comes from `ChaCha8Rng` seeded with [`SimConfig::seed`], so
//! a seed reproduces a model or a series bit-for-bit on every platform.
//! Gaussian draws use `rand_distr::StandardNormal`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{is_stable, spectral_radius_of_lags, GvarModel, GvarStructure, TimeSeries};

const MAX_ATTEMPTS: usize = 1000;
const CONTEMPORANEOUS_WEIGHT: f64 = 0.2;

/// Parameters of the random model generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub d: usize,
    pub k: usize,
    /// Expected temporal indegree. Each of the `k d` possible parents of a
    /// node is included with probability `q / (k d)`, and each contemporaneous
    /// pair with probability `q / (2 (d - 1))`.
    pub q: f64,
    /// Nonzero lag coefficients are uniform on `[-hi, -lo] U [lo, hi]`.
    pub coef_range: (f64, f64),
    /// Generated models have companion spectral radius below `1 - margin`.
    pub stability_margin: f64,
    pub burn_in: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(d: usize, k: usize, q: f64, seed: u64) -> Self {
        Self { d, k, q, coef_range: (0.1, 0.9), stability_margin: 0.05, burn_in: 500, seed }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.coef_range;
        if self.d == 0 || self.k == 0 {
            return Err(Error::InvalidArgument("simulation needs d >= 1 and k >= 1".into()));
        }
        if !(self.q >= 0.0) || self.q > (self.k * self.d) as f64 {
            return Err(Error::InvalidArgument(format!(
                "q must lie in [0, k d] = [0, {}], got {}",
                self.k * self.d,
                self.q
            )));
        }
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid coefficient range [{lo}, {hi}]")));
        }
        if !(0.0..1.0).contains(&self.stability_margin) {
            return Err(Error::InvalidArgument("stability margin must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Draws a random stable GVAR model together with its ground-truth structure.
///
/// When a draw is unstable, `A_m` is multiplied by `c^m` with
/// `c = 0.99 (1 - margin) / rho`, which scales every companion eigenvalue by
/// exactly `c` and keeps the sparsity pattern. Draws that still fail are
/// discarded and redrawn.
pub fn random_gvar(config: &SimConfig) -> Result<(GvarModel, GvarStructure)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (d, k) = (config.d, config.k);
    let limit = 1.0 - config.stability_margin;
    let p_edge = config.q / (k * d) as f64;

    for _ in 0..MAX_ATTEMPTS {
        let mut lags = vec![DMatrix::zeros(d, d); k];
        for a in lags.iter_mut() {
            for target in 0..d {
                for source in 0..d {
                    if rng.random::<f64>() < p_edge {
                        a[(target, source)] = signed_uniform(&mut rng, config.coef_range);
                    }
                }
            }
        }
        let rho = spectral_radius_of_lags(&lags);
        if rho >= limit {
            let c = 0.99 * limit / rho;
            for (m, a) in lags.iter_mut().enumerate() {
                a.scale_mut(c.powi(m as i32 + 1));
            }
            if spectral_radius_of_lags(&lags) >= limit {
                continue;
            }
        }
        let precision = random_precision(&mut rng, d, config.q);
        let model = GvarModel::new(lags, precision)?;
        let structure = model.structure();
        return Ok((model, structure));
    }
    Err(Error::SimulationFailure(format!("no stable model after {MAX_ATTEMPTS} attempts")))
}

fn signed_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    let mag = if lo == hi { lo } else { rng.random_range(lo..hi) };
    if rng.random::<bool>() {
        mag
    } else {
        -mag
    }
}

/// Sparse diagonally dominant precision matrix with `+-0.2` off-diagonals.
fn random_precision(rng: &mut ChaCha8Rng, d: usize, q: f64) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(d, d);
    if d > 1 {
        let p_pair = (q / (2.0 * (d - 1) as f64)).min(1.0);
        for a in 0..d {
            for b in a + 1..d {
                if rng.random::<f64>() < p_pair {
                    let w = if rng.random::<bool>() { CONTEMPORANEOUS_WEIGHT } else { -CONTEMPORANEOUS_WEIGHT };
                    omega[(a, b)] = w;
                    omega[(b, a)] = w;
                }
            }
        }
    }
    for a in 0..d {
        let off: f64 = omega.row(a).iter().map(|v| v.abs()).sum();
        omega[(a, a)] = 1.0 + off;
    }
    omega
}

/// Simulates `n` observations of `model`, starting from zero presample values
/// and discarding the first `burn_in` steps.
pub fn draw_series(model: &GvarModel, n: usize, burn_in: usize, seed: u64) -> Result<TimeSeries> {
    if !is_stable(model, 0.0) {
        return Err(Error::InvalidArgument("cannot simulate an unstable model".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 observations, got {n}")));
    }
    let d = model.dim();
    let k = model.lag();
    // e = L^-T z has covariance (L L^T)^-1 = Omega^-1.
    let chol = model.precision().clone().cholesky().expect("precision is positive definite");
    let noise_map = chol
        .l()
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(d, d))
        .expect("Cholesky factor is nonsingular");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = burn_in + n;
    let mut history: Vec<DVector<f64>> = vec![DVector::zeros(d); k];
    let mut out = DMatrix::zeros(n, d);
    let mut z = DVector::zeros(d);
    for step in 0..total {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let mut y = &noise_map * &z;
        for (m, a) in model.lag_matrices().iter().enumerate() {
            y.gemv(1.0, a, &history[m], 1.0);
        }
        history.rotate_right(1);
        if step >= burn_in {
            out.set_row(step - burn_in, &y.transpose());
        }
        history[0] = y;
    }
    TimeSeries::new(out)
}

/// Four-variable sparse VAR(2) reference model with seven lag coefficients
/// and contemporaneous edges {0,2} and {2,3}.
pub fn example_var2() -> GvarModel {
    #[rustfmt::skip]
    let a1 = DMatrix::from_row_slice(4, 4, &[
         0.3, 0.0,  0.0,  0.0,
        -0.2, 0.2,  0.0,  0.0,
         0.0, 0.0, -0.3,  0.0,
         0.0, 0.0,  0.2, -0.2,
    ]);
    #[rustfmt::skip]
    let a2 = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.1, 0.0,  0.0,
        0.0, 0.0, 0.0,  0.0,
        0.0, 0.0, 0.0, -0.1,
        0.0, 0.0, 0.0,  0.0,
    ]);
    #[rustfmt::skip]
    let omega = DMatrix::from_row_slice(4, 4, &[
        1.0, 0.0, 0.2, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.2, 0.0, 1.0, 0.2,
        0.0, 0.0, 0.2, 1.0,
    ]);
    GvarModel::new(vec![a1, a2], omega).expect("reference model is valid")
}
