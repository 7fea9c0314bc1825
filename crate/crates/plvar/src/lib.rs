//! Structure learning for sparse Gaussian vector autoregressions.
//!
//! The pipeline first selects a temporal lag graph (and the lag length) by
//! greedily maximising a fractional marginal pseudo-likelihood over lagged
//! Markov blankets, then learns the contemporaneous precision graph from the
//! residuals of the fitted lag regressions. Given a structure, [`params`]
//! computes sparsity-constrained maximum likelihood estimates of the lag
//! matrices and the precision matrix.
//!
//! Per-node subproblems run on rayon when the `parallel` feature is enabled
//! (the default); see [`Execution`].

pub mod error;
pub mod evaluate;
pub mod model;
mod par;
pub mod params;
pub mod scoring;
pub mod search;
pub mod simulate;

pub use error::{Error, Result};
pub use model::{GvarModel, GvarStructure, TemporalEdge, TimeSeries};
pub use par::Execution;
pub use search::{learn_structure, LearnConfig, LearnResult, TemporalResult};
