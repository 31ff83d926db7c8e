use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cosine_similarity, l2_normalize_rows, FeatureMatrix, Matrix, RelevanceMatrix};

/// Paired image and text features with their relevance labels. Item `i`
/// is image `i` paired with text `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub image: FeatureMatrix,
    pub text: FeatureMatrix,
    pub relevance: RelevanceMatrix,
}

impl Dataset {
    pub fn new(image: FeatureMatrix, text: FeatureMatrix, relevance: RelevanceMatrix) -> Result<Self> {
        if image.rows() != text.rows() {
            return Err(Error::DimMismatch { left: image.rows(), right: text.rows() });
        }
        if relevance.size() != image.rows() {
            return Err(Error::DimMismatch { left: relevance.size(), right: image.rows() });
        }
        Ok(Self { image, text, relevance })
    }

    pub fn len(&self) -> usize {
        self.image.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            image: self.image.select_rows(idx),
            text: self.text.select_rows(idx),
            relevance: self.relevance.select(idx),
        }
    }

    /// Splits off the last fifth of the items as a held-out set.
    pub fn split_holdout(&self) -> Result<(Dataset, Dataset)> {
        let n = self.len();
        let held = n / 5;
        if held < 2 || n - held < 2 {
            return Err(Error::BadDims(format!("{n} items are too few for a train/held-out split")));
        }
        let train: Vec<usize> = (0..n - held).collect();
        let test: Vec<usize> = (n - held..n).collect();
        Ok((self.subset(&train), self.subset(&test)))
    }
}

/// Parameters of [`make_synthetic`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub n: usize,
    pub d_z: usize,
    pub d_v: usize,
    pub d_t: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self { n: 1000, d_z: 16, d_v: 32, d_t: 32, noise_sigma: 0.1, seed: 0 }
    }
}

/// A synthetic dataset plus the latent points it was generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub data: Dataset,
    pub latent: Matrix,
}

pub const SYNTH_CLUSTERS: usize = 8;

/// Spread of latent points around their cluster center (norm of the offset
/// relative to the unit center before renormalization).
const CLUSTER_SPREAD: f64 = 0.6;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Latent points on the unit sphere in `d_z` dimensions around
/// [`SYNTH_CLUSTERS`] random centers; relevance is their cosine similarity.
/// Image and text features are two independent Gaussian linear maps of the
/// latent plus isotropic Gaussian noise of scale `noise_sigma`.
pub fn make_synthetic(p: &SynthParams) -> Result<SyntheticDataset> {
    if p.n < 2 || p.d_z < 2 || p.d_v < 2 || p.d_t < 2 {
        return Err(Error::BadDims(format!(
            "need n, d_z, d_v, d_t >= 2; got {}, {}, {}, {}",
            p.n, p.d_z, p.d_v, p.d_t
        )));
    }
    if !(p.noise_sigma >= 0.0 && p.noise_sigma.is_finite()) {
        return Err(Error::BadDims(format!("noise_sigma must be >= 0, got {}", p.noise_sigma)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let centers = l2_normalize_rows(&Matrix::from_fn(SYNTH_CLUSTERS, p.d_z, |_, _| gaussian(&mut rng))?)?;
    let offset_scale = CLUSTER_SPREAD / (p.d_z as f64).sqrt();
    let mut raw = Matrix::zeros(p.n, p.d_z);
    for i in 0..p.n {
        let c = rng.random_range(0..SYNTH_CLUSTERS);
        for k in 0..p.d_z {
            let v = centers.get(c, k) + offset_scale * gaussian(&mut rng);
            raw.set(i, k, v);
        }
    }
    let latent = l2_normalize_rows(&raw)?;

    let map_v = Matrix::from_fn(p.d_z, p.d_v, |_, _| gaussian(&mut rng))?;
    let map_t = Matrix::from_fn(p.d_z, p.d_t, |_, _| gaussian(&mut rng))?;
    let mut image = latent.matmul(&map_v)?;
    for v in image.as_mut_slice() {
        *v += p.noise_sigma * gaussian(&mut rng);
    }
    let mut text = latent.matmul(&map_t)?;
    for v in text.as_mut_slice() {
        *v += p.noise_sigma * gaussian(&mut rng);
    }

    let cos = cosine_similarity(&latent, &latent)?;
    let relevance =
        RelevanceMatrix::new(Matrix::from_fn(
            p.n,
            p.n,
            |i, j| {
                if i == j {
                    1.0
                } else {
                    cos.get(i, j).clamp(-1.0, 1.0)
                }
            },
        )?)?;

    Ok(SyntheticDataset { data: Dataset::new(image, text, relevance)?, latent })
}
