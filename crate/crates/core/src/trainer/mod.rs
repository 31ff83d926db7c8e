//! Minimal end-to-end training: a linear encoder onto the unit sphere,
//! trained with any of the losses by chaining `dL/dS` through the encoder.

mod data;
mod encoder;
mod optim;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{Hyperparams, LossKind};
use crate::metrics::{map_at_r, mean_row_tau, r_precision, rank_rows, recall_at_k, rsum};

pub use data::{make_synthetic, Dataset, SynthParams, SyntheticDataset, SYNTH_CLUSTERS};
pub use encoder::{Forward, Gradients, LinearEncoder};
pub use optim::OptimizerKind;

use optim::Optimizer;

/// Default relevance threshold above which a candidate counts as relevant
/// for mAP@R and R-Precision.
pub const DEFAULT_RELEVANCE_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    /// The learning rate is multiplied by `lr_decay_factor` every
    /// `lr_decay_epoch` epochs.
    pub lr_decay_epoch: usize,
    pub lr_decay_factor: f64,
    pub seed: u64,
    /// Embedding dimension.
    pub dim: usize,
    pub hyperparams: Hyperparams,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 20,
            lr: 0.0005,
            lr_decay_epoch: 10,
            lr_decay_factor: 0.1,
            seed: 0,
            dim: 16,
            hyperparams: Hyperparams::default(),
            loss: LossKind::Bcls,
            optimizer: OptimizerKind::Sgd,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::BadConfig(msg));
        if self.batch_size < 2 {
            return bad(format!("batch_size must be >= 2, got {}", self.batch_size));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be finite and >= 0, got {}", self.lr));
        }
        if self.lr_decay_epoch == 0 {
            return bad("lr_decay_epoch must be >= 1".into());
        }
        if self.lr_decay_factor.is_nan() || self.lr_decay_factor <= 0.0 {
            return bad(format!("lr_decay_factor must be > 0, got {}", self.lr_decay_factor));
        }
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        self.hyperparams.validate()?;
        if matches!(self.loss, LossKind::KendallSw | LossKind::KendallSwHs | LossKind::Bcls) {
            self.hyperparams.windows()?;
        }
        Ok(())
    }

    /// Learning rate used during 1-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = (epoch.saturating_sub(1) / self.lr_decay_epoch) as i32;
        self.lr * self.lr_decay_factor.powi(decays)
    }
}

/// Held-out statistics after one epoch; epoch 0 is the untrained encoder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean batch loss over the epoch (before each update).
    pub loss: f64,
    pub tau_i2t: f64,
    pub tau_t2i: f64,
    pub r1_i2t: f64,
    pub r1_t2i: f64,
}

impl EpochLog {
    pub fn tau(&self) -> f64 {
        0.5 * (self.tau_i2t + self.tau_t2i)
    }

    pub fn r1(&self) -> f64 {
        0.5 * (self.r1_i2t + self.r1_t2i)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub encoder: LinearEncoder,
    pub log: Vec<EpochLog>,
}

impl TrainOutcome {
    pub fn last(&self) -> &EpochLog {
        self.log.last().expect("log always has the initial entry")
    }
}

/// Trains on the first four fifths of `dataset` and reports held-out
/// metrics on the last fifth after every epoch. Deterministic in
/// `config.seed`: the same seed drives initialization and shuffling.
pub fn train(config: &TrainConfig, dataset: &Dataset) -> Result<TrainOutcome> {
    config.validate()?;
    let (train_set, held) = dataset.split_holdout()?;
    if train_set.len() < config.batch_size {
        return Err(Error::BadConfig(format!(
            "training split has {} items, fewer than batch_size {}",
            train_set.len(),
            config.batch_size
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = LinearEncoder::init(train_set.image.cols(), train_set.text.cols(), config.dim, &mut rng)?;
    let mut optimizer = Optimizer::new(config.optimizer, &[encoder.w_v.as_slice().len(), encoder.w_t.as_slice().len()]);

    let n_batches = train_set.len() / config.batch_size;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let initial_loss = {
        let mut total = 0.0;
        for chunk in order.chunks_exact(config.batch_size) {
            total += batch_step(config, &encoder, &train_set, chunk)?.0;
        }
        total / n_batches as f64
    };
    let mut log = vec![epoch_log(0, initial_loss, &encoder, &held)?];

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let lr = config.lr_at(epoch);
        let mut total = 0.0;
        for chunk in order.chunks_exact(config.batch_size) {
            let (loss, grads) = batch_step(config, &encoder, &train_set, chunk)?;
            total += loss;
            let LinearEncoder { w_v, w_t } = &mut encoder;
            optimizer.step(lr, &mut [w_v, w_t], &[&grads.w_v, &grads.w_t]);
        }
        log.push(epoch_log(epoch, total / n_batches as f64, &encoder, &held)?);
    }
    Ok(TrainOutcome { encoder, log })
}

fn batch_step(
    config: &TrainConfig,
    encoder: &LinearEncoder,
    data: &Dataset,
    idx: &[usize],
) -> Result<(f64, Gradients)> {
    let batch = data.subset(idx);
    let fwd = encoder.forward(&batch.image, &batch.text)?;
    let res = config.loss.evaluate(&fwd.sim, &batch.relevance, &config.hyperparams)?;
    let grads = encoder.backward_from(&fwd, &batch.image, &batch.text, &res.grad)?;
    Ok((res.value, grads))
}

fn epoch_log(epoch: usize, loss: f64, encoder: &LinearEncoder, held: &Dataset) -> Result<EpochLog> {
    let report = evaluate(encoder, held, DEFAULT_RELEVANCE_THRESHOLD)?;
    Ok(EpochLog {
        epoch,
        loss,
        tau_i2t: report.tau_i2t,
        tau_t2i: report.tau_t2i,
        r1_i2t: report.r1_i2t,
        r1_t2i: report.r1_t2i,
    })
}

/// Instance-based and semantic retrieval metrics, all fractions except `rsum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub r1_i2t: f64,
    pub r5_i2t: f64,
    pub r10_i2t: f64,
    pub r1_t2i: f64,
    pub r5_t2i: f64,
    pub r10_t2i: f64,
    /// Sum of the six recalls in percent.
    pub rsum: f64,
    pub tau_i2t: f64,
    pub tau_t2i: f64,
    pub map_r_i2t: f64,
    pub map_r_t2i: f64,
    pub rp_i2t: f64,
    pub rp_t2i: f64,
}

impl EvalReport {
    pub fn recalls(&self) -> [f64; 6] {
        [self.r1_i2t, self.r5_i2t, self.r10_i2t, self.r1_t2i, self.r5_t2i, self.r10_t2i]
    }
}

/// Encodes the whole dataset and scores it.
pub fn evaluate(encoder: &LinearEncoder, dataset: &Dataset, threshold: f64) -> Result<EvalReport> {
    let fwd = encoder.forward(&dataset.image, &dataset.text)?;
    score_report(fwd.sim.matrix(), dataset.relevance.matrix(), threshold)
}

/// Metrics for a square score matrix (images x texts, item `i` paired with
/// text `i`) against relevance labels. The instance-level relevant set of
/// query `q` is `{q}`; the semantic set is every candidate whose relevance
/// exceeds `threshold`.
pub fn score_report(
    scores: &crate::matrix::Matrix,
    relevance: &crate::matrix::Matrix,
    threshold: f64,
) -> Result<EvalReport> {
    if !scores.is_square() || scores.rows() != relevance.rows() || !relevance.is_square() {
        return Err(Error::DimMismatch { left: scores.rows(), right: relevance.rows() });
    }
    let scores_t = scores.transpose();
    let relevance_t = relevance.transpose();

    let i2t = rank_rows(scores, |q| vec![q]);
    let t2i = rank_rows(&scores_t, |q| vec![q]);
    let above = |m: &crate::matrix::Matrix, q: usize| {
        m.row(q).iter().enumerate().filter(|(_, &r)| r > threshold).map(|(j, _)| j).collect::<Vec<_>>()
    };
    let sem_i2t = rank_rows(scores, |q| above(relevance, q));
    let sem_t2i = rank_rows(&scores_t, |q| above(&relevance_t, q));

    let r = |o: &[_], k| recall_at_k(o, k);
    let mut report = EvalReport {
        r1_i2t: r(&i2t, 1),
        r5_i2t: r(&i2t, 5),
        r10_i2t: r(&i2t, 10),
        r1_t2i: r(&t2i, 1),
        r5_t2i: r(&t2i, 5),
        r10_t2i: r(&t2i, 10),
        rsum: 0.0,
        tau_i2t: mean_row_tau(scores, relevance)?,
        tau_t2i: mean_row_tau(&scores_t, &relevance_t)?,
        map_r_i2t: map_at_r(&sem_i2t)?,
        map_r_t2i: map_at_r(&sem_t2i)?,
        rp_i2t: r_precision(&sem_i2t)?,
        rp_t2i: r_precision(&sem_t2i)?,
    };
    report.rsum = rsum(&report.recalls().map(|v| 100.0 * v));
    Ok(report)
}
