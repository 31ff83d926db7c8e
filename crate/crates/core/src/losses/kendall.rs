//! Continuous-label branch: pairwise hinge surrogates of Kendall's tau.
//!
//! For an anchor with similarity row `s` and relevance row `r`, a candidate
//! pair `(j, k)` with `r_j > r_k` is penalized by `[s_k - s_j]_+`, i.e.
//! whenever the predicted order is discordant with the label order.

use super::{symmetric, Anchor, AnchorTerm, LossResult};
use crate::error::Result;
use crate::matrix::{RelevanceMatrix, SimilarityMatrix};
use crate::sampling::{arg_extreme, sample_window, WindowSpec};

fn pairwise(a: &Anchor<'_>, relax: f64, margin: f64) -> AnchorTerm {
    let b = a.sims.len();
    let mut term = AnchorTerm::new(b);
    for j in 0..b {
        for k in 0..b {
            if a.labels[j] > a.labels[k] + relax {
                term.hinge(a.sims[k] - a.sims[j] + margin, 1.0, k, j);
            }
        }
    }
    term
}

/// Sum over all anchors and all label-ordered candidate pairs.
pub fn kendall_basic(s: &SimilarityMatrix, r: &RelevanceMatrix, kendall_margin: f64) -> Result<LossResult> {
    symmetric(s, r, |a| Ok(pairwise(a, 0.0, kendall_margin)))
}

/// As [`kendall_basic`] but only pairs whose labels differ by more than `alpha`.
pub fn kendall_relaxed(
    s: &SimilarityMatrix,
    r: &RelevanceMatrix,
    alpha: f64,
    kendall_margin: f64,
) -> Result<LossResult> {
    symmetric(s, r, |a| Ok(pairwise(a, alpha, kendall_margin)))
}

/// The terms of [`kendall_basic`] whose preferred candidate is the anchor's
/// own pair (`j = i`). With zero margins this is the all-negatives triplet loss.
pub fn kendall_diagonal(s: &SimilarityMatrix, r: &RelevanceMatrix, kendall_margin: f64) -> Result<LossResult> {
    symmetric(s, r, |a| {
        let i = a.index;
        let mut term = AnchorTerm::new(a.sims.len());
        for k in 0..a.sims.len() {
            if a.labels[i] > a.labels[k] {
                term.hinge(a.sims[k] - a.sims[i] + kendall_margin, 1.0, k, i);
            }
        }
        Ok(term)
    })
}

/// Sum over windows of all positive/negative pairs in each window.
pub fn kendall_sw(s: &SimilarityMatrix, r: &RelevanceMatrix, spec: &WindowSpec) -> Result<LossResult> {
    symmetric(s, r, |a| {
        let mut term = AnchorTerm::new(a.sims.len());
        for m in 0..spec.count() {
            let w = sample_window(a.index, a.labels, spec, m);
            for &j in &w.pos {
                for &k in &w.neg {
                    term.hinge(a.sims[k] - a.sims[j], 1.0, k, j);
                }
            }
        }
        Ok(term)
    })
}

/// Distance from the chosen score to the nearest other score in `set`;
/// infinity for a singleton.
fn selection_gap(scores: &[f64], set: &[usize], chosen: usize) -> f64 {
    set.iter().filter(|&&j| j != chosen).map(|&j| (scores[j] - scores[chosen]).abs()).fold(f64::INFINITY, f64::min)
}

/// One hinge per anchor and window between the least similar positive and
/// the most similar negative, averaged over the `M` windows. Windows with an
/// empty positive or negative set contribute nothing.
pub fn kendall_sw_hs(s: &SimilarityMatrix, r: &RelevanceMatrix, spec: &WindowSpec) -> Result<LossResult> {
    let weight = 1.0 / spec.count() as f64;
    symmetric(s, r, |a| {
        let mut term = AnchorTerm::new(a.sims.len());
        for m in 0..spec.count() {
            let w = sample_window(a.index, a.labels, spec, m);
            let Some(check) = arg_extreme(a.sims, &w.pos, |c, b| c < b) else { continue };
            let Some(hat) = arg_extreme(a.sims, &w.neg, |c, b| c > b) else { continue };
            term.hinge(a.sims[hat] - a.sims[check], weight, hat, check);
            term.kink = term.kink.min(selection_gap(a.sims, &w.pos, check)).min(selection_gap(a.sims, &w.neg, hat));
        }
        Ok(term)
    })
}
