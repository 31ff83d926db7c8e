//! Naive reference implementations shared by the integration tests and the
//! acceptance suite. They work on plain nested vectors, index `S[i][j]`
//! directly in both directions and enumerate everything.

#![allow(dead_code)]

use bcls_core::{Matrix, RelevanceMatrix, SimilarityMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Grid = Vec<Vec<f64>>;

pub fn grid(m: &Matrix) -> Grid {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random `b x b` instance with labels drawn from a small grid of values so
/// that label ties and exact window-edge hits actually occur.
pub fn random_instance(b: usize, rng: &mut ChaCha8Rng) -> (SimilarityMatrix, RelevanceMatrix) {
    let s = Matrix::from_fn(b, b, |_, _| rng.random_range(-1.0..=1.0)).unwrap();
    let r = Matrix::from_fn(b, b, |i, j| {
        if i == j {
            1.0
        } else if rng.random_bool(0.3) {
            (rng.random_range(-10..=10) as f64) / 10.0
        } else {
            rng.random_range(-1.0..=1.0)
        }
    })
    .unwrap();
    (SimilarityMatrix::new(s), RelevanceMatrix::new(r).unwrap())
}

/// Reference value and gradient with respect to `S`.
pub struct Reference {
    pub value: f64,
    pub grad: Grid,
}

/// Accumulates hinges anchor by anchor, image anchors first.
struct Acc {
    margin: f64,
    value: f64,
    partial: f64,
    grad: Grid,
}

impl Acc {
    fn new(b: usize, margin: f64) -> Self {
        Self { margin, value: 0.0, partial: 0.0, grad: vec![vec![0.0; b]; b] }
    }

    /// `(row, col)` of candidate `c` for anchor `a`.
    fn at(image: bool, a: usize, c: usize) -> (usize, usize) {
        if image {
            (a, c)
        } else {
            (c, a)
        }
    }

    fn hinge(&mut self, image: bool, a: usize, up: usize, down: usize, weight: f64, s: &Grid) {
        let (ui, uj) = Self::at(image, a, up);
        let (di, dj) = Self::at(image, a, down);
        let arg = s[ui][uj] - s[di][dj] + self.margin;
        if arg > 0.0 {
            self.partial += weight * arg;
            self.grad[ui][uj] += weight;
            self.grad[di][dj] -= weight;
        }
    }

    fn end_anchor(&mut self) {
        self.value += self.partial;
        self.partial = 0.0;
    }

    fn finish(self) -> Reference {
        Reference { value: self.value, grad: self.grad }
    }
}

fn label(r: &Grid, image: bool, a: usize, c: usize) -> f64 {
    if image {
        r[a][c]
    } else {
        r[c][a]
    }
}

fn sim(s: &Grid, image: bool, a: usize, c: usize) -> f64 {
    if image {
        s[a][c]
    } else {
        s[c][a]
    }
}

/// Every ordered candidate pair `(j, k)` with `r_j - r_k > relax`, both
/// directions, O(B^3).
pub fn naive_kendall(s: &Grid, r: &Grid, relax: f64, margin: f64) -> Reference {
    let b = s.len();
    let mut acc = Acc::new(b, margin);
    for image in [true, false] {
        for a in 0..b {
            for j in 0..b {
                for k in 0..b {
                    if label(r, image, a, j) > label(r, image, a, k) + relax {
                        acc.hinge(image, a, k, j, 1.0, s);
                    }
                }
            }
            acc.end_anchor();
        }
    }
    acc.finish()
}

/// Window top edges found by walking down from 1 until the bottom edge
/// reaches -1.
pub fn naive_window_tops(alpha: f64, beta: f64) -> Vec<f64> {
    let mut tops = Vec::new();
    let mut m = 0;
    loop {
        let top = 1.0 - m as f64 * beta;
        if top - alpha <= -1.0 + 1e-9 {
            break;
        }
        tops.push(top);
        m += 1;
    }
    if tops.is_empty() {
        tops.push(1.0);
    }
    tops
}

fn window_sets(r: &Grid, image: bool, a: usize, top: f64, alpha: f64) -> (Vec<usize>, Vec<usize>) {
    let b = r.len();
    let pos = (0..b).filter(|&c| label(r, image, a, c) >= top).collect();
    let neg = (0..b).filter(|&c| label(r, image, a, c) < top - alpha).collect();
    (pos, neg)
}

pub fn naive_sw(s: &Grid, r: &Grid, alpha: f64, beta: f64) -> Reference {
    let b = s.len();
    let tops = naive_window_tops(alpha, beta);
    let mut acc = Acc::new(b, 0.0);
    for image in [true, false] {
        for a in 0..b {
            for &top in &tops {
                let (pos, neg) = window_sets(r, image, a, top, alpha);
                for &j in &pos {
                    for &k in &neg {
                        acc.hinge(image, a, k, j, 1.0, s);
                    }
                }
            }
            acc.end_anchor();
        }
    }
    acc.finish()
}

/// Linear scan for the lowest-index minimum (positives) or maximum (negatives).
pub fn scan_extreme(scores: &[f64], set: &[usize], want_min: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for &c in set {
        best = match best {
            None => Some(c),
            Some(p) if want_min && scores[c] < scores[p] => Some(c),
            Some(p) if !want_min && scores[c] > scores[p] => Some(c),
            keep => keep,
        };
    }
    best
}

pub fn naive_sw_hs(s: &Grid, r: &Grid, alpha: f64, beta: f64) -> Reference {
    let b = s.len();
    let tops = naive_window_tops(alpha, beta);
    let w = 1.0 / tops.len() as f64;
    let mut acc = Acc::new(b, 0.0);
    for image in [true, false] {
        for a in 0..b {
            let row: Vec<f64> = (0..b).map(|c| sim(s, image, a, c)).collect();
            for &top in &tops {
                let (pos, neg) = window_sets(r, image, a, top, alpha);
                if let (Some(p), Some(n)) = (scan_extreme(&row, &pos, true), scan_extreme(&row, &neg, false)) {
                    acc.hinge(image, a, n, p, w, s);
                }
            }
            acc.end_anchor();
        }
    }
    acc.finish()
}

fn negatives(r: &Grid, image: bool, a: usize) -> Vec<usize> {
    (0..r.len()).filter(|&c| c != a && label(r, image, a, c) < 1.0).collect()
}

pub fn naive_triplet_all(s: &Grid, r: &Grid, margin: f64) -> Reference {
    let b = s.len();
    let mut acc = Acc::new(b, margin);
    for image in [true, false] {
        for a in 0..b {
            for n in negatives(r, image, a) {
                acc.hinge(image, a, n, a, 1.0, s);
            }
            acc.end_anchor();
        }
    }
    acc.finish()
}

pub fn naive_triplet_hn_value(s: &Grid, r: &Grid, margin: f64) -> f64 {
    let b = s.len();
    let mut total = 0.0;
    for image in [true, false] {
        for a in 0..b {
            let hard =
                negatives(r, image, a).into_iter().map(|c| sim(s, image, a, c)).fold(f64::NEG_INFINITY, f64::max);
            total += (hard - sim(s, image, a, a) + margin).max(0.0);
        }
    }
    total
}

/// Concordant count, discordant count and tau by direct pair enumeration.
pub fn brute_tau(x: &[f64], y: &[f64]) -> (u64, u64, f64) {
    let n = x.len();
    let (mut c, mut d) = (0u64, 0u64);
    for a in 0..n {
        for b in a + 1..n {
            let p = (x[a] - x[b]) * (y[a] - y[b]);
            if p > 0.0 {
                c += 1;
            } else if p < 0.0 {
                d += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    (c, d, (c as f64 - d as f64) / pairs)
}

/// Positions where the gradient is nonzero.
pub fn support(g: &Grid) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, row) in g.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if *v != 0.0 {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn max_abs_diff(a: &Grid, b: &Grid) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
