//! Central finite-difference checks of the analytic loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::losses::{Hyperparams, LossKind};
use crate::matrix::{Matrix, RelevanceMatrix, SimilarityMatrix};
use crate::trainer::LinearEncoder;

/// Finite-difference step.
pub const STEP: f64 = 1e-6;
/// Instances whose loss sits closer than this to a kink are redrawn.
pub const KINK_EXCLUSION: f64 = 1e-4;
/// Pass threshold on [`relative_error`].
pub const TOLERANCE: f64 = 1e-4;

/// Gives up after this many draws per requested trial.
const MAX_DRAWS_PER_TRIAL: usize = 100;

/// Central differences `(f(x + h e_k) - f(x - h e_k)) / 2h` for every entry.
pub fn numeric_grad(at: &Matrix, h: f64, mut f: impl FnMut(&Matrix) -> Result<f64>) -> Result<Matrix> {
    let mut grad = Matrix::zeros(at.rows(), at.cols());
    let mut x = at.clone();
    for k in 0..at.as_slice().len() {
        let orig = x.as_slice()[k];
        x.as_mut_slice()[k] = orig + h;
        let up = f(&x)?;
        x.as_mut_slice()[k] = orig - h;
        let down = f(&x)?;
        x.as_mut_slice()[k] = orig;
        grad.as_mut_slice()[k] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

/// Largest entrywise `|a - n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: &Matrix, numeric: &Matrix) -> f64 {
    analytic
        .as_slice()
        .iter()
        .zip(numeric.as_slice())
        .map(|(a, n)| (a - n).abs() / 1f64.max(a.abs()).max(n.abs()))
        .fold(0.0, f64::max)
}

/// Uniform random similarities in `[-1, 1]` and relevance labels in
/// `[-1, 1]` with a unit diagonal.
pub fn random_instance<R: Rng>(b: usize, rng: &mut R) -> (SimilarityMatrix, RelevanceMatrix) {
    let s = Matrix::from_fn(b, b, |_, _| rng.random_range(-1.0..=1.0)).expect("finite");
    let r = Matrix::from_fn(b, b, |i, j| if i == j { 1.0 } else { rng.random_range(-1.0..=1.0) }).expect("finite");
    (SimilarityMatrix::new(s), RelevanceMatrix::new(r).expect("valid relevance"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub loss: LossKind,
    pub trials: usize,
    pub rejected: usize,
    pub max_relative_error: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= TOLERANCE
    }
}

fn draw_accepted<T>(
    trials: usize,
    mut draw: impl FnMut() -> Result<Option<T>>,
    mut check: impl FnMut(T) -> Result<f64>,
) -> Result<(usize, f64)> {
    let mut rejected = 0;
    let mut worst = 0.0_f64;
    let mut accepted = 0;
    while accepted < trials {
        if rejected > MAX_DRAWS_PER_TRIAL * trials.max(1) {
            return Err(Error::BadConfig("could not draw kink-free instances".into()));
        }
        match draw()? {
            Some(inst) => {
                worst = worst.max(check(inst)?);
                accepted += 1;
            }
            None => rejected += 1,
        }
    }
    Ok((rejected, worst))
}

/// Compares `dL/dS` against central differences on `trials` random
/// kink-free `b x b` instances.
pub fn check_loss(loss: LossKind, hp: &Hyperparams, b: usize, trials: usize, seed: u64) -> Result<GradcheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rejected, worst) = draw_accepted(
        trials,
        || {
            let (s, r) = random_instance(b, &mut rng);
            let res = loss.evaluate(&s, &r, hp)?;
            Ok((res.kink_distance > KINK_EXCLUSION).then_some((s, r, res.grad)))
        },
        |(s, r, analytic)| {
            let numeric = numeric_grad(s.matrix(), STEP, |m| {
                Ok(loss.evaluate(&SimilarityMatrix::new(m.clone()), &r, hp)?.value)
            })?;
            Ok(relative_error(&analytic, &numeric))
        },
    )?;
    Ok(GradcheckReport { loss, trials, rejected, max_relative_error: worst })
}

/// End-to-end check: loss of a random linear encoder on random features,
/// differentiated with respect to both projection matrices.
pub fn check_end_to_end(
    loss: LossKind,
    hp: &Hyperparams,
    b: usize,
    trials: usize,
    seed: u64,
) -> Result<GradcheckReport> {
    const D_V: usize = 6;
    const D_T: usize = 5;
    const DIM: usize = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rejected, worst) = draw_accepted(
        trials,
        || {
            let enc = LinearEncoder::init(D_V, D_T, DIM, &mut rng)?;
            let xv = Matrix::from_fn(b, D_V, |_, _| rng.random_range(-1.0..=1.0))?;
            let xt = Matrix::from_fn(b, D_T, |_, _| rng.random_range(-1.0..=1.0))?;
            let (_, r) = random_instance(b, &mut rng);
            let fwd = enc.forward(&xv, &xt)?;
            let res = loss.evaluate(&fwd.sim, &r, hp)?;
            if res.kink_distance <= KINK_EXCLUSION {
                return Ok(None);
            }
            let grads = enc.backward_from(&fwd, &xv, &xt, &res.grad)?;
            Ok(Some((enc, xv, xt, r, grads)))
        },
        |(enc, xv, xt, r, grads)| {
            let value =
                |e: &LinearEncoder| -> Result<f64> { Ok(loss.evaluate(&e.forward(&xv, &xt)?.sim, &r, hp)?.value) };
            let num_v =
                numeric_grad(&enc.w_v, STEP, |w| value(&LinearEncoder { w_v: w.clone(), w_t: enc.w_t.clone() }))?;
            let num_t =
                numeric_grad(&enc.w_t, STEP, |w| value(&LinearEncoder { w_v: enc.w_v.clone(), w_t: w.clone() }))?;
            Ok(relative_error(&grads.w_v, &num_v).max(relative_error(&grads.w_t, &num_t)))
        },
    )?;
    Ok(GradcheckReport { loss, trials, rejected, max_relative_error: worst })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_grad_of_quadratic() {
        let x = Matrix::from_rows(&[[1.0, -2.0], [0.5, 3.0]]).unwrap();
        let g = numeric_grad(&x, 1e-5, |m| Ok(m.as_slice().iter().map(|v| v * v).sum())).unwrap();
        for (gv, xv) in g.as_slice().iter().zip(x.as_slice()) {
            assert!((gv - 2.0 * xv).abs() < 1e-8);
        }
    }

    #[test]
    fn relative_error_floor() {
        let a = Matrix::from_rows(&[[0.0, 10.0]]).unwrap();
        let n = Matrix::from_rows(&[[1e-5, 10.001]]).unwrap();
        let e = relative_error(&a, &n);
        assert!((e - 0.001 / 10.001).abs() < 1e-9);
    }

    #[test]
    fn every_loss_passes_small() {
        let hp = Hyperparams::default();
        for loss in LossKind::ALL {
            let rep = check_loss(loss, &hp, 5, 5, 1).unwrap();
            assert!(rep.passed(), "{loss}: {}", rep.max_relative_error);
        }
    }
}
