//! Greedy forward/backward Markov blanket search.

use crate::error::Result;
use crate::scoring::MarkovBlanket;

/// Outcome of one blanket search.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyOutcome {
    pub blanket: MarkovBlanket,
    /// Objective of the returned blanket.
    pub objective: f64,
    /// Objective after the start and after every accepted addition or removal.
    pub accepted: Vec<f64>,
}

/// Finds a Markov blanket of `target` among `candidates` by alternating one
/// greedy addition with repeated greedy removals.
///
/// Each addition sweep adds the single candidate with the largest objective,
/// provided it beats the incumbent; removals repeat while dropping a member
/// improves the objective. The search stops when a full round changes
/// nothing or the blanket reaches `n - 1` members. Ties go to the lowest
/// column index, so the result is deterministic for a deterministic
/// `objective`.
pub fn greedy_markov_blanket<F>(target: usize, candidates: &[usize], n: usize, objective: F) -> Result<GreedyOutcome>
where
    F: Fn(&MarkovBlanket) -> Result<f64>,
{
    let mut pool: Vec<usize> = candidates.iter().copied().filter(|&c| c != target).collect();
    pool.sort_unstable();
    pool.dedup();

    let max_size = n.saturating_sub(1);
    let mut blanket = MarkovBlanket::empty(target);
    let mut best = objective(&blanket)?;
    let mut accepted = vec![best];

    while blanket.len() < max_size {
        let mut changed = false;

        let mut addition = None;
        let mut addition_score = best;
        for &j in pool.iter().filter(|&&j| !blanket.contains(j)) {
            let trial = blanket.with(j);
            let score = objective(&trial)?;
            if score > addition_score {
                addition = Some(trial);
                addition_score = score;
            }
        }
        if let Some(next) = addition {
            blanket = next;
            best = addition_score;
            accepted.push(best);
            changed = true;
        }

        loop {
            let mut removal = None;
            let mut removal_score = best;
            for &j in blanket.members() {
                let trial = blanket.without(j);
                let score = objective(&trial)?;
                if score > removal_score {
                    removal = Some(trial);
                    removal_score = score;
                }
            }
            match removal {
                Some(next) => {
                    blanket = next;
                    best = removal_score;
                    accepted.push(best);
                    changed = true;
                }
                None => break,
            }
        }

        if !changed {
            break;
        }
    }

    Ok(GreedyOutcome { blanket, objective: best, accepted })
}
