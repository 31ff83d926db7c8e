//! Continuous pseudo labels from caption-caption similarity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Matrix, RelevanceMatrix, SimilarityMatrix};

/// Caption indices grouped by the image they describe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaptionGroups(Vec<Vec<usize>>);

impl CaptionGroups {
    /// Validates that the groups are non-empty, disjoint, and together cover
    /// `0..n_captions`.
    pub fn new(groups: Vec<Vec<usize>>, n_captions: usize) -> Result<Self> {
        let mut seen = vec![false; n_captions];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::BadGroups(format!("group {g} is empty")));
            }
            for &c in members {
                if c >= n_captions {
                    return Err(Error::BadGroups(format!("caption {c} in group {g} out of range (n = {n_captions})")));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::BadGroups(format!("caption {c} appears twice")));
                }
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::BadGroups(format!("caption {c} is not in any group")));
        }
        Ok(Self(groups))
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.0
    }

    pub fn n_captions(&self) -> usize {
        self.0.iter().map(Vec::len).sum()
    }

    /// Caption -> image index map.
    pub fn pairing(&self) -> Vec<usize> {
        let mut out = vec![0; self.n_captions()];
        for (g, members) in self.0.iter().enumerate() {
            for &c in members {
                out[c] = g;
            }
        }
        out
    }
}

/// Relevance of image `V_i` (the image paired with caption `i`) to caption
/// `T_j`: the caption similarity clamped to `[-1, 1]`, with the paired
/// caption fixed at exactly 1.
pub fn relevance_from_text_similarity(text_sim: &SimilarityMatrix, pairing: &[usize]) -> Result<RelevanceMatrix> {
    if !text_sim.is_square() {
        return Err(Error::NotSquare { rows: text_sim.rows(), cols: text_sim.cols() });
    }
    let n = text_sim.rows();
    if pairing.len() != n {
        return Err(Error::BadPairing { got: pairing.len(), expected: n });
    }
    let m = Matrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { text_sim.get(i, j).clamp(-1.0, 1.0) })?;
    RelevanceMatrix::new(m)
}

/// Population standard deviation of all within-group caption similarities,
/// pooled over groups. Each unordered pair `{a, b}` contributes
/// `text_sim[min][max]` once.
pub fn alpha_statistic(text_sim: &SimilarityMatrix, groups: &CaptionGroups) -> Result<f64> {
    if !text_sim.is_square() {
        return Err(Error::NotSquare { rows: text_sim.rows(), cols: text_sim.cols() });
    }
    if groups.n_captions() != text_sim.rows() {
        return Err(Error::BadPairing { got: groups.n_captions(), expected: text_sim.rows() });
    }
    let mut values = Vec::new();
    for members in groups.groups() {
        let mut sorted = members.clone();
        sorted.sort_unstable();
        for (x, &a) in sorted.iter().enumerate() {
            for &b in &sorted[x + 1..] {
                values.push(text_sim.get(a, b));
            }
        }
    }
    if values.is_empty() {
        return Err(Error::NoPairs);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}
