use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cosine_similarity, dot, l2_normalize_rows, norm, FeatureMatrix, Matrix, SimilarityMatrix};
use crate::par;

/// Two linear projections onto a shared unit sphere. The implied image-text
/// similarity is the bilinear form `x_v^T (W_v W_t^T) x_t` up to normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearEncoder {
    /// `d_v x d` image projection.
    pub w_v: Matrix,
    /// `d_t x d` text projection.
    pub w_t: Matrix,
}

/// Intermediate values of a forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub proj_v: Matrix,
    pub proj_t: Matrix,
    pub emb_v: Matrix,
    pub emb_t: Matrix,
    pub sim: SimilarityMatrix,
}

/// Gradients of a scalar loss with respect to the encoder parameters, and
/// the intermediate gradients with respect to the unnormalized projections.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub w_v: Matrix,
    pub w_t: Matrix,
    pub proj_v: Matrix,
    pub proj_t: Matrix,
}

impl LinearEncoder {
    pub fn new(w_v: Matrix, w_t: Matrix) -> Result<Self> {
        if w_v.cols() != w_t.cols() {
            return Err(Error::DimMismatch { left: w_v.cols(), right: w_t.cols() });
        }
        Ok(Self { w_v, w_t })
    }

    /// Uniform initialization in `[-1/sqrt(d_in), 1/sqrt(d_in)]`.
    pub fn init<R: Rng>(d_v: usize, d_t: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if d_v == 0 || d_t == 0 || dim == 0 {
            return Err(Error::BadDims(format!("encoder dims {d_v}, {d_t}, {dim}")));
        }
        let mut uniform = |d_in: usize, rows: usize| {
            let bound = 1.0 / (d_in as f64).sqrt();
            Matrix::from_fn(rows, dim, |_, _| rng.random_range(-bound..=bound))
        };
        let w_v = uniform(d_v, d_v)?;
        let w_t = uniform(d_t, d_t)?;
        Ok(Self { w_v, w_t })
    }

    pub fn dim(&self) -> usize {
        self.w_v.cols()
    }

    pub fn forward(&self, xv: &FeatureMatrix, xt: &FeatureMatrix) -> Result<Forward> {
        let proj_v = xv.matmul(&self.w_v)?;
        let proj_t = xt.matmul(&self.w_t)?;
        let emb_v = l2_normalize_rows(&proj_v)?;
        let emb_t = l2_normalize_rows(&proj_t)?;
        let sim = cosine_similarity(&emb_v, &emb_t)?;
        Ok(Forward { proj_v, proj_t, emb_v, emb_t, sim })
    }

    /// Chains `dL/dS` back to the projections, recomputing the forward pass.
    pub fn backward(&self, xv: &FeatureMatrix, xt: &FeatureMatrix, d_sim: &Matrix) -> Result<Gradients> {
        let fwd = self.forward(xv, xt)?;
        self.backward_from(&fwd, xv, xt, d_sim)
    }

    pub fn backward_from(
        &self,
        fwd: &Forward,
        xv: &FeatureMatrix,
        xt: &FeatureMatrix,
        d_sim: &Matrix,
    ) -> Result<Gradients> {
        if d_sim.rows() != fwd.emb_v.rows() || d_sim.cols() != fwd.emb_t.rows() {
            return Err(Error::DimMismatch { left: d_sim.rows(), right: fwd.emb_v.rows() });
        }
        let d_emb_v = d_sim.matmul(&fwd.emb_t)?;
        let d_emb_t = d_sim.t_matmul(&fwd.emb_v)?;
        let proj_v = through_normalization(&fwd.proj_v, &fwd.emb_v, &d_emb_v);
        let proj_t = through_normalization(&fwd.proj_t, &fwd.emb_t, &d_emb_t);
        let w_v = xv.t_matmul(&proj_v)?;
        let w_t = xt.t_matmul(&proj_t)?;
        Ok(Gradients { w_v, w_t, proj_v, proj_t })
    }
}

/// Applies the Jacobian of `y -> y / |y|` row by row:
/// `dL/dy = (g - e (e . g)) / |y|`.
fn through_normalization(proj: &Matrix, emb: &Matrix, d_emb: &Matrix) -> Matrix {
    let rows = par::map_indexed(proj.rows(), |i| {
        let (e, g) = (emb.row(i), d_emb.row(i));
        let inv = 1.0 / norm(proj.row(i));
        let along = dot(e, g);
        e.iter().zip(g).map(|(ei, gi)| (gi - ei * along) * inv).collect::<Vec<_>>()
    });
    Matrix::new(proj.rows(), proj.cols(), rows.concat()).expect("finite gradient")
}
