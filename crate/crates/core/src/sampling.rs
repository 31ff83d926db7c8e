//! Sliding-window positive/negative sampling over the relevance axis and
//! hard-pair selection inside each window.
//!
//! Window `m` has top edge `u_m = 1 - m * beta` and bottom edge
//! `u_m - alpha`. Candidates at or above the top edge are positives,
//! candidates strictly below the bottom edge are negatives, and everything
//! in `[u_m - alpha, u_m)` is left unconstrained.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when rounding the window count up, so that `(2 - 0.2) / 0.1`
/// evaluating to `18.000000000000004` still yields 18 windows.
const COUNT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    alpha: f64,
    beta: f64,
    uppers: Vec<f64>,
}

impl WindowSpec {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of windows `M`.
    pub fn count(&self) -> usize {
        self.uppers.len()
    }

    /// Top edges `u_0 = 1 > u_1 > ... > u_{M-1}`.
    pub fn uppers(&self) -> &[f64] {
        &self.uppers
    }

    pub fn upper(&self, m: usize) -> f64 {
        self.uppers[m]
    }
}

/// Builds the window schedule for relaxation `alpha` and stride `beta`.
pub fn build_windows(alpha: f64, beta: f64) -> Result<WindowSpec> {
    if !(beta > 0.0 && beta <= alpha && alpha < 2.0) {
        return Err(Error::BadParams { alpha, beta });
    }
    let count = ((2.0 - alpha) / beta - COUNT_SLACK).ceil().max(1.0) as usize;
    let uppers = (0..count).map(|m| 1.0 - m as f64 * beta).collect();
    Ok(WindowSpec { alpha, beta, uppers })
}

/// Positive and negative candidate sets of one anchor in one window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSample {
    pub anchor: usize,
    pub window: usize,
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

/// Splits one anchor's relevance row for window `m`. Either set may be empty.
pub fn sample_window(anchor: usize, relevance_row: &[f64], spec: &WindowSpec, m: usize) -> WindowSample {
    let top = spec.upper(m);
    let bottom = top - spec.alpha();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (j, &r) in relevance_row.iter().enumerate() {
        if r >= top {
            pos.push(j);
        } else if r < bottom {
            neg.push(j);
        }
    }
    WindowSample { anchor, window: m, pos, neg }
}

/// Hardest positive (least similar) and hardest negative (most similar)
/// within a window sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HardPair {
    pub positive: usize,
    pub negative: usize,
}

/// Returns `None` when either set is empty. Ties go to the lowest index.
pub fn select_hard_pair(similarity_row: &[f64], sample: &WindowSample) -> Option<HardPair> {
    let positive = arg_extreme(similarity_row, &sample.pos, |cand, best| cand < best)?;
    let negative = arg_extreme(similarity_row, &sample.neg, |cand, best| cand > best)?;
    Some(HardPair { positive, negative })
}

/// First index in `set` whose score beats every earlier one under `better`.
/// `set` is assumed sorted ascending, which `sample_window` guarantees.
pub(crate) fn arg_extreme(scores: &[f64], set: &[usize], better: impl Fn(f64, f64) -> bool) -> Option<usize> {
    let (&first, rest) = set.split_first()?;
    let mut best = first;
    for &j in rest {
        if better(scores[j], scores[best]) {
            best = j;
        }
    }
    Some(best)
}
