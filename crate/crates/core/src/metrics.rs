//! Retrieval metrics: Kendall's tau, Recall@K, RSUM, mAP@R, R-Precision and
//! Pearson correlation.
//!
//! Everything is reported as a fraction in `[0, 1]` except [`rsum`], which
//! follows the percent convention of retrieval tables.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Kendall tau-a together with its pair counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub tau: f64,
    pub concordant: u64,
    pub discordant: u64,
    pub pairs: u64,
}

/// Kendall's tau-a, `(C - D) / (N (N - 1) / 2)`. Pairs tied in either input
/// count as neither concordant nor discordant.
///
/// Runs in `O(N log N)`: sort by `(scores, labels)`, then count label
/// inversions with a merge sort.
pub fn kendall_tau(scores: &[f64], labels: &[f64]) -> Result<TauResult> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    let n = scores.len();
    if n < 2 {
        return Err(Error::TooShort);
    }
    let pairs = (n as u64) * (n as u64 - 1) / 2;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then_with(|| labels[a].total_cmp(&labels[b])));

    let tied_pairs = |run: u64| run * (run - 1) / 2;
    let mut score_ties = 0u64;
    let mut joint_ties = 0u64;
    let (mut score_run, mut joint_run) = (1u64, 1u64);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if scores[a] == scores[b] {
            score_run += 1;
            if labels[a] == labels[b] {
                joint_run += 1;
            } else {
                joint_ties += tied_pairs(joint_run);
                joint_run = 1;
            }
        } else {
            score_ties += tied_pairs(score_run);
            joint_ties += tied_pairs(joint_run);
            score_run = 1;
            joint_run = 1;
        }
    }
    score_ties += tied_pairs(score_run);
    joint_ties += tied_pairs(joint_run);

    let mut seq: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
    let mut buf = vec![0.0; n];
    let discordant = count_inversions(&mut seq, &mut buf);

    let mut label_ties = 0u64;
    let mut run = 1u64;
    for w in seq.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            label_ties += tied_pairs(run);
            run = 1;
        }
    }
    label_ties += tied_pairs(run);

    let untied = pairs + joint_ties - score_ties - label_ties;
    let concordant = untied - discordant;
    let tau = (concordant as f64 - discordant as f64) / pairs as f64;
    Ok(TauResult { tau, concordant, discordant, pairs })
}

/// Sorts `v` ascending and returns the number of strict inversions.
fn count_inversions(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (l, r) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(l, bl) + count_inversions(r, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            count += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    count
}

/// One query's ranked candidate list and its set of relevant candidates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingOutcome {
    pub query: usize,
    /// Candidate indices by descending score; ties by ascending index.
    pub order: Vec<usize>,
    pub relevant: BTreeSet<usize>,
}

impl RankingOutcome {
    pub fn from_scores(query: usize, scores: &[f64], relevant: impl IntoIterator<Item = usize>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Self { query, order, relevant: relevant.into_iter().collect() }
    }

    fn hits_in_top(&self, k: usize) -> usize {
        self.order.iter().take(k).filter(|c| self.relevant.contains(c)).count()
    }

    fn r(&self) -> Result<usize> {
        match self.relevant.len() {
            0 => Err(Error::EmptyRelevantSet(self.query)),
            r => Ok(r),
        }
    }
}

/// Ranks every row of `scores` (one query per row).
pub fn rank_rows<F>(scores: &Matrix, relevant: F) -> Vec<RankingOutcome>
where
    F: Fn(usize) -> Vec<usize> + Sync + Send,
{
    par::map_indexed(scores.rows(), |q| RankingOutcome::from_scores(q, scores.row(q), relevant(q)))
}

/// Fraction of queries with at least one relevant candidate in the top `k`.
pub fn recall_at_k(outcomes: &[RankingOutcome], k: usize) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    let hits = outcomes.iter().filter(|o| o.hits_in_top(k) > 0).count();
    hits as f64 / outcomes.len() as f64
}

/// Sum of six recall values (R@1, R@5, R@10 in both directions), in percent.
pub fn rsum(recalls: &[f64; 6]) -> f64 {
    recalls.iter().sum()
}

/// Mean over queries of average precision truncated at `R = |relevant|`.
pub fn map_at_r(outcomes: &[RankingOutcome]) -> Result<f64> {
    mean_over(outcomes, |o| {
        let r = o.r()?;
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (rank, c) in o.order.iter().take(r).enumerate() {
            if o.relevant.contains(c) {
                hits += 1;
                ap += hits as f64 / (rank + 1) as f64;
            }
        }
        Ok(ap / r as f64)
    })
}

/// Mean over queries of the fraction of relevant items in the top `R`.
pub fn r_precision(outcomes: &[RankingOutcome]) -> Result<f64> {
    mean_over(outcomes, |o| {
        let r = o.r()?;
        Ok(o.hits_in_top(r) as f64 / r as f64)
    })
}

fn mean_over(outcomes: &[RankingOutcome], f: impl Fn(&RankingOutcome) -> Result<f64>) -> Result<f64> {
    if outcomes.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for o in outcomes {
        total += f(o)?;
    }
    Ok(total / outcomes.len() as f64)
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::TooShort);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean Kendall tau over the rows of `scores` against the matching rows of `labels`.
pub fn mean_row_tau(scores: &Matrix, labels: &Matrix) -> Result<f64> {
    if scores.rows() != labels.rows() || scores.cols() != labels.cols() {
        return Err(Error::DimMismatch { left: scores.rows(), right: labels.rows() });
    }
    let taus = par::try_map_indexed(scores.rows(), |q| kendall_tau(scores.row(q), labels.row(q)))?;
    Ok(taus.iter().map(|t| t.tau).sum::<f64>() / taus.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_heavy_ties() {
        let x = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let t = kendall_tau(&x, &x).unwrap();
        assert_eq!((t.concordant, t.discordant, t.pairs), (5, 0, 15));
        let t = kendall_tau(&[2.0; 4], &[3.0; 4]).unwrap();
        assert_eq!((t.tau, t.concordant, t.discordant), (0.0, 0, 0));
    }

    #[test]
    fn tau_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &x).unwrap().tau, 1.0);
        let rev = [4.0, 3.0, 2.0, 1.0];
        let t = kendall_tau(&rev, &x).unwrap();
        assert_eq!(t.tau, -1.0);
        assert_eq!((t.concordant, t.discordant, t.pairs), (0, 6, 6));
    }

    #[test]
    fn tau_with_ties() {
        // pairs: (0,1) tied in scores; (2,3) tied in labels; (0,1) not tied in labels
        let s = [1.0, 1.0, 2.0, 3.0];
        let l = [0.0, 1.0, 2.0, 2.0];
        let t = kendall_tau(&s, &l).unwrap();
        // untied pairs: (0,2),(0,3),(1,2),(1,3) all concordant
        assert_eq!((t.concordant, t.discordant, t.pairs), (4, 0, 6));
        assert!((t.tau - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn tau_errors() {
        assert!(matches!(kendall_tau(&[1.0], &[1.0]), Err(Error::TooShort)));
        assert!(matches!(kendall_tau(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch { .. })));
    }

    fn outcome(order: &[usize], relevant: &[usize]) -> RankingOutcome {
        RankingOutcome { query: 0, order: order.to_vec(), relevant: relevant.iter().copied().collect() }
    }

    #[test]
    fn recall_counts() {
        let hits: Vec<_> =
            (0..5).map(|q| if q < 2 { outcome(&[0, 1, 2], &[0]) } else { outcome(&[0, 1, 2], &[2]) }).collect();
        assert!((recall_at_k(&hits, 1) - 0.4).abs() < 1e-15);
        assert_eq!(recall_at_k(&hits, 3), 1.0);
        assert_eq!(recall_at_k(&[outcome(&[1, 2, 0], &[0])], 2), 0.0);
    }

    #[test]
    fn rsum_values() {
        assert_eq!(rsum(&[100.0; 6]), 600.0);
        assert_eq!(rsum(&[0.0; 6]), 0.0);
        assert_eq!(rsum(&[81.0, 95.7, 98.0, 61.0, 85.4, 90.4]), 511.5);
    }

    #[test]
    fn map_and_r_precision() {
        let o = outcome(&[5, 1, 2, 7, 3], &[5, 7]);
        assert_eq!(r_precision(std::slice::from_ref(&o)).unwrap(), 0.5);
        assert_eq!(map_at_r(std::slice::from_ref(&o)).unwrap(), 0.5);

        let perfect = outcome(&[2, 0, 1], &[0, 2]);
        assert_eq!(map_at_r(std::slice::from_ref(&perfect)).unwrap(), 1.0);
        assert_eq!(r_precision(std::slice::from_ref(&perfect)).unwrap(), 1.0);

        let miss = outcome(&[1, 2, 0], &[0]);
        assert_eq!(map_at_r(std::slice::from_ref(&miss)).unwrap(), 0.0);

        let empty = outcome(&[0, 1], &[]);
        assert!(matches!(map_at_r(std::slice::from_ref(&empty)), Err(Error::EmptyRelevantSet(0))));
        assert!(matches!(r_precision(&[empty]), Err(Error::EmptyRelevantSet(0))));
    }

    #[test]
    fn ranking_tie_break() {
        let o = RankingOutcome::from_scores(3, &[0.5, 0.9, 0.5, 0.9], [0]);
        assert_eq!(o.order, vec![1, 3, 0, 2]);
    }

    #[test]
    fn pearson_lines() {
        let x: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 - 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-15);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &z).unwrap() + 1.0).abs() < 1e-15);
        assert!(matches!(pearson(&x, &[1.0; 10]), Err(Error::ZeroVariance)));
    }
}
