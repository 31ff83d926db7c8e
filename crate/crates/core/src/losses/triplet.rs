//! Binary-label branch: triplet ranking loss over all negatives, the hardest
//! negative, or a Log-Sum-Exp soft maximum of the negatives.

use super::{symmetric, Anchor, AnchorTerm, LossResult};
use crate::error::{Error, Result};
use crate::matrix::{RelevanceMatrix, SimilarityMatrix};

#[inline]
fn is_negative(a: &Anchor<'_>, j: usize) -> bool {
    j != a.index && a.labels[j] < 1.0
}

fn no_negatives(a: &Anchor<'_>) -> Error {
    Error::NoNegatives { anchor: a.index, direction: a.direction }
}

/// Triplet loss summed over every negative of every anchor.
pub fn triplet_all(s: &SimilarityMatrix, r: &RelevanceMatrix, margin: f64) -> Result<LossResult> {
    symmetric(s, r, |a| {
        let mut term = AnchorTerm::new(a.sims.len());
        let pos = a.sims[a.index];
        for j in (0..a.sims.len()).filter(|&j| is_negative(a, j)) {
            term.hinge(a.sims[j] - pos + margin, 1.0, j, a.index);
        }
        Ok(term)
    })
}

/// Triplet loss against the single most similar negative per anchor.
pub fn triplet_hn(s: &SimilarityMatrix, r: &RelevanceMatrix, margin: f64) -> Result<LossResult> {
    symmetric(s, r, |a| {
        let mut best: Option<usize> = None;
        let mut runner_up = f64::NEG_INFINITY;
        for j in (0..a.sims.len()).filter(|&j| is_negative(a, j)) {
            match best {
                Some(b) if a.sims[j] <= a.sims[b] => runner_up = runner_up.max(a.sims[j]),
                Some(b) => {
                    runner_up = runner_up.max(a.sims[b]);
                    best = Some(j);
                }
                None => best = Some(j),
            }
        }
        let hat = best.ok_or_else(|| no_negatives(a))?;
        let mut term = AnchorTerm::new(a.sims.len());
        term.hinge(a.sims[hat] - a.sims[a.index] + margin, 1.0, hat, a.index);
        term.kink = term.kink.min(a.sims[hat] - runner_up);
        Ok(term)
    })
}

/// Triplet loss against `(1/gamma) log sum_j exp(gamma * s_j)` over the
/// negatives, a smooth upper bound of the hardest-negative similarity.
pub fn triplet_sn(s: &SimilarityMatrix, r: &RelevanceMatrix, margin: f64, gamma: f64) -> Result<LossResult> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::BadConfig(format!("gamma must be > 0, got {gamma}")));
    }
    symmetric(s, r, |a| {
        let negatives: Vec<usize> = (0..a.sims.len()).filter(|&j| is_negative(a, j)).collect();
        if negatives.is_empty() {
            return Err(no_negatives(a));
        }
        let shift = negatives.iter().map(|&j| a.sims[j]).fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = negatives.iter().map(|&j| (gamma * (a.sims[j] - shift)).exp()).collect();
        let total: f64 = weights.iter().sum();
        let soft_max = shift + total.ln() / gamma;

        let mut term = AnchorTerm::new(a.sims.len());
        let arg = soft_max - a.sims[a.index] + margin;
        term.hinges = 1;
        term.kink = arg.abs();
        if arg > 0.0 {
            term.value = arg;
            for (&j, w) in negatives.iter().zip(&weights) {
                term.grad[j] += w / total;
            }
            term.grad[a.index] -= 1.0;
        }
        Ok(term)
    })
}
