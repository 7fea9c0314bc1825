//! Contemporaneous graph learning on lag-regression residuals.

use std::collections::BTreeSet;

use super::greedy::greedy_markov_blanket;
use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::par::Execution;
use crate::scoring::{log_local_fmpl, log_prior_contemporaneous, ScatterMatrix};

/// Per-node blankets and their OR-symmetrised edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct ContemporaneousResult {
    pub blankets: Vec<Vec<usize>>,
    /// Edges `(a, b)` with `a < b`.
    pub edges: BTreeSet<(usize, usize)>,
    pub node_scores: Vec<f64>,
}

/// Undirected edge set containing `{i, j}` whenever `j` is in the blanket of
/// `i` or `i` is in the blanket of `j`.
pub fn or_closure(blankets: &[Vec<usize>]) -> BTreeSet<(usize, usize)> {
    blankets
        .iter()
        .enumerate()
        .flat_map(|(i, mb)| mb.iter().map(move |&j| (i.min(j), i.max(j))))
        .collect()
}

/// Learns the contemporaneous graph from a residual series by a per-node
/// blanket search over all other variables.
pub fn learn_contemporaneous(resid: &TimeSeries, gamma: f64, jitter: f64, execution: Execution) -> Result<ContemporaneousResult> {
    let d = resid.dim();
    let n = resid.len();
    if n < d + 1 {
        return Err(Error::InvalidArgument(format!(
            "contemporaneous search over {d} variables needs at least {} residual rows, got {n}",
            d + 1
        )));
    }
    let s = ScatterMatrix::from_data(resid.values()).with_jitter(jitter);
    if d == 1 {
        let score = log_local_fmpl(&s, &crate::scoring::MarkovBlanket::empty(0))?;
        return Ok(ContemporaneousResult { blankets: vec![Vec::new()], edges: BTreeSet::new(), node_scores: vec![score] });
    }
    let candidates: Vec<usize> = (0..d).collect();
    let per_node = execution.try_map(d, |i| {
        let outcome = greedy_markov_blanket(i, &candidates, n, |b| {
            Ok(log_local_fmpl(&s, b)? + log_prior_contemporaneous(b.len(), d, gamma)?)
        })?;
        Ok::<_, Error>((outcome.blanket.members().to_vec(), outcome.objective))
    })?;
    let (blankets, node_scores): (Vec<_>, Vec<_>) = per_node.into_iter().unzip();
    let edges = or_closure(&blankets);
    Ok(ContemporaneousResult { blankets, edges, node_scores })
}
