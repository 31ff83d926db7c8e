//! Ranking losses over a similarity matrix `S` (images x texts) and a
//! relevance matrix `R`, each returning the loss value and `dL/dS`.
//!
//! Every loss is a sum of an image-anchor part over the rows of `S` and a
//! text-anchor part over its columns. The text part is the image part
//! applied to `(S^T, R^T)`, so each loss only implements a single row
//! kernel. Rows are evaluated independently (in parallel with the
//! `parallel` feature) and reduced in anchor order: image anchors first,
//! then text anchors.
//!
//! Hinges use `[x]_+ = max(x, 0)` with subgradient 0 at `x = 0`. Batch
//! reduction is a plain sum. Ties in hard mining go to the lowest index.
//! Candidates with relevance `< 1` are the negatives of the triplet family.

mod kendall;
mod triplet;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Direction, Error, Result};
use crate::matrix::{Matrix, RelevanceMatrix, SimilarityMatrix};
use crate::par;
use crate::sampling::{build_windows, WindowSpec};

pub use kendall::{kendall_basic, kendall_diagonal, kendall_relaxed, kendall_sw, kendall_sw_hs};
pub use triplet::{triplet_all, triplet_hn, triplet_sn};

/// Loss value together with its gradient with respect to `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub grad: Matrix,
    /// Number of hinge terms evaluated, both directions.
    pub hinge_evaluations: usize,
    /// Smallest distance from a non-differentiable point: hinge arguments
    /// next to zero, or near-ties in a hard-mining argmax/argmin.
    /// `f64::INFINITY` when the loss touched no such point.
    pub kink_distance: f64,
}

impl LossResult {
    /// Elementwise sum of two results over the same batch.
    pub fn combine(mut self, other: LossResult) -> LossResult {
        self.value += other.value;
        self.grad.add_assign(&other.grad);
        self.hinge_evaluations += other.hinge_evaluations;
        self.kink_distance = self.kink_distance.min(other.kink_distance);
        self
    }
}

/// Loss hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Triplet margin `m`.
    pub margin: f64,
    /// Log-Sum-Exp scale of the soft negative.
    pub gamma: f64,
    /// Relaxation: label gap below which pair order is unconstrained.
    pub alpha: f64,
    /// Sliding-window stride.
    pub beta: f64,
    /// Optional margin inside the Kendall hinges; 0 by default.
    pub kendall_margin: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self { margin: 0.2, gamma: 50.0, alpha: 0.2, beta: 0.1, kendall_margin: 0.0 }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.margin.is_nan() || self.margin < 0.0 {
            return Err(Error::BadConfig(format!("margin must be >= 0, got {}", self.margin)));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(Error::BadConfig(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if self.kendall_margin.is_nan() || self.kendall_margin < 0.0 {
            return Err(Error::BadConfig(format!("kendall_margin must be >= 0, got {}", self.kendall_margin)));
        }
        Ok(())
    }

    pub fn windows(&self) -> Result<WindowSpec> {
        build_windows(self.alpha, self.beta)
    }
}

/// The eight supported objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    TripletAll,
    TripletHn,
    TripletSn,
    KendallBasic,
    KendallRelaxed,
    KendallSw,
    KendallSwHs,
    Bcls,
}

impl LossKind {
    pub const ALL: [LossKind; 8] = [
        LossKind::TripletAll,
        LossKind::TripletHn,
        LossKind::TripletSn,
        LossKind::KendallBasic,
        LossKind::KendallRelaxed,
        LossKind::KendallSw,
        LossKind::KendallSwHs,
        LossKind::Bcls,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::TripletAll => "triplet_all",
            LossKind::TripletHn => "triplet_hn",
            LossKind::TripletSn => "triplet_sn",
            LossKind::KendallBasic => "kendall_basic",
            LossKind::KendallRelaxed => "kendall_relaxed",
            LossKind::KendallSw => "kendall_sw",
            LossKind::KendallSwHs => "kendall_sw_hs",
            LossKind::Bcls => "bcls",
        }
    }

    /// Whether the loss requires every anchor to have a negative (`r < 1`).
    pub fn needs_negatives(self) -> bool {
        matches!(self, LossKind::TripletHn | LossKind::TripletSn | LossKind::Bcls)
    }

    pub fn evaluate(self, s: &SimilarityMatrix, r: &RelevanceMatrix, hp: &Hyperparams) -> Result<LossResult> {
        match self {
            LossKind::TripletAll => triplet_all(s, r, hp.margin),
            LossKind::TripletHn => triplet_hn(s, r, hp.margin),
            LossKind::TripletSn => triplet_sn(s, r, hp.margin, hp.gamma),
            LossKind::KendallBasic => kendall_basic(s, r, hp.kendall_margin),
            LossKind::KendallRelaxed => kendall_relaxed(s, r, hp.alpha, hp.kendall_margin),
            LossKind::KendallSw => kendall_sw(s, r, &hp.windows()?),
            LossKind::KendallSwHs => kendall_sw_hs(s, r, &hp.windows()?),
            LossKind::Bcls => bcls(s, r, hp),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::BadConfig(format!("unknown loss '{s}'")))
    }
}

/// Soft-negative triplet plus hard-sample sliding-window Kendall loss.
pub fn bcls(s: &SimilarityMatrix, r: &RelevanceMatrix, hp: &Hyperparams) -> Result<LossResult> {
    let spec = hp.windows()?;
    let binary = triplet_sn(s, r, hp.margin, hp.gamma)?;
    let continuous = kendall_sw_hs(s, r, &spec)?;
    Ok(binary.combine(continuous))
}

/// One anchor's view of the batch: its similarity and relevance rows.
pub(crate) struct Anchor<'a> {
    pub index: usize,
    pub direction: Direction,
    pub sims: &'a [f64],
    pub labels: &'a [f64],
}

/// One anchor's contribution; `grad` is indexed by candidate.
pub(crate) struct AnchorTerm {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hinges: usize,
    pub kink: f64,
}

impl AnchorTerm {
    pub fn new(b: usize) -> Self {
        Self { value: 0.0, grad: vec![0.0; b], hinges: 0, kink: f64::INFINITY }
    }

    /// Evaluates `weight * [arg]_+`; on activation adds `weight` to the
    /// gradient of `up` and subtracts it from `down`.
    #[inline]
    pub fn hinge(&mut self, arg: f64, weight: f64, up: usize, down: usize) {
        self.hinges += 1;
        self.kink = self.kink.min(arg.abs());
        if arg > 0.0 {
            self.value += weight * arg;
            self.grad[up] += weight;
            self.grad[down] -= weight;
        }
    }
}

pub(crate) fn check_sizes(s: &SimilarityMatrix, r: &RelevanceMatrix) -> Result<usize> {
    let b = r.size();
    if !s.is_square() || s.rows() != b || b < 2 {
        return Err(Error::SizeMismatch { s: s.rows().max(s.cols()), r: b });
    }
    Ok(b)
}

/// Runs `kernel` for every image anchor (rows) and every text anchor
/// (columns) and assembles the batch result.
pub(crate) fn symmetric<F>(s: &SimilarityMatrix, r: &RelevanceMatrix, kernel: F) -> Result<LossResult>
where
    F: Fn(&Anchor<'_>) -> Result<AnchorTerm> + Sync + Send,
{
    let b = check_sizes(s, r)?;
    let (st, rt) = (s.transpose(), r.transpose());
    let run = |sm: &Matrix, rm: &Matrix, direction: Direction| {
        par::try_map_indexed(b, |i| kernel(&Anchor { index: i, direction, sims: sm.row(i), labels: rm.row(i) }))
    };
    let image = run(s.matrix(), r.matrix(), Direction::ImageToText)?;
    let text = run(st.matrix(), rt.matrix(), Direction::TextToImage)?;

    let mut value = 0.0;
    let mut hinge_evaluations = 0;
    let mut kink_distance = f64::INFINITY;
    let mut grad = Matrix::zeros(b, b);
    for (i, term) in image.iter().enumerate() {
        value += term.value;
        hinge_evaluations += term.hinges;
        kink_distance = kink_distance.min(term.kink);
        grad.row_mut(i).copy_from_slice(&term.grad);
    }
    for (i, term) in text.iter().enumerate() {
        value += term.value;
        hinge_evaluations += term.hinges;
        kink_distance = kink_distance.min(term.kink);
        for (j, g) in term.grad.iter().enumerate() {
            if *g != 0.0 {
                let cur = grad.get(j, i);
                grad.set(j, i, cur + g);
            }
        }
    }
    Ok(LossResult { value, grad, hinge_evaluations, kink_distance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in LossKind::ALL {
            assert_eq!(k.name().parse::<LossKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
        assert!("triplet".parse::<LossKind>().is_err());
    }

    #[test]
    fn size_checks() {
        let s = SimilarityMatrix::new(Matrix::zeros(3, 3));
        let r = RelevanceMatrix::identity(2);
        for k in LossKind::ALL {
            assert!(matches!(k.evaluate(&s, &r, &Hyperparams::default()), Err(Error::SizeMismatch { .. })));
        }
        let s1 = SimilarityMatrix::new(Matrix::zeros(1, 1));
        let r1 = RelevanceMatrix::identity(1);
        assert!(triplet_all(&s1, &r1, 0.2).is_err());
    }

    #[test]
    fn bcls_is_additive() {
        let s = SimilarityMatrix::from_rows(&[
            [0.3, 0.5, -0.2, 0.1],
            [0.7, 0.2, 0.4, -0.6],
            [0.0, 0.9, 0.5, 0.3],
            [-0.4, 0.1, 0.6, 0.2],
        ])
        .unwrap();
        let r = RelevanceMatrix::from_rows(&[
            [1.0, 0.6, -0.1, 0.2],
            [0.5, 1.0, 0.3, -0.7],
            [0.1, 0.8, 1.0, 0.4],
            [-0.3, 0.0, 0.7, 1.0],
        ])
        .unwrap();
        let hp = Hyperparams::default();
        let sum = bcls(&s, &r, &hp).unwrap();
        let a = triplet_sn(&s, &r, hp.margin, hp.gamma).unwrap();
        let b = kendall_sw_hs(&s, &r, &hp.windows().unwrap()).unwrap();
        assert_eq!(sum.value, a.value + b.value);
        let mut g = a.grad.clone();
        g.add_assign(&b.grad);
        assert_eq!(sum.grad, g);
    }

    #[test]
    fn hyperparam_validation() {
        assert!(Hyperparams::default().validate().is_ok());
        assert!(Hyperparams { gamma: 0.0, ..Default::default() }.validate().is_err());
        assert!(Hyperparams { margin: -0.1, ..Default::default() }.validate().is_err());
    }
}
