mod common;

use bcls_core::trainer::*;
use bcls_core::{LossKind, Matrix};
use nalgebra::DMatrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

fn from_na(m: &DMatrix<f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]).unwrap()
}

/// Least-squares maps from each modality back to the latent points.
fn oracle_encoder(synth: &SyntheticDataset) -> LinearEncoder {
    let z = to_na(&synth.latent);
    let solve = |x: &Matrix| {
        let pinv = to_na(x).pseudo_inverse(1e-10).unwrap();
        from_na(&(pinv * &z))
    };
    LinearEncoder::new(solve(&synth.data.image), solve(&synth.data.text)).unwrap()
}

fn noiseless() -> SyntheticDataset {
    make_synthetic(&SynthParams { noise_sigma: 0.0, seed: 3, ..Default::default() }).unwrap()
}

#[test]
fn oracle_encoder_is_perfect_on_noiseless_data() {
    let synth = noiseless();
    let enc = oracle_encoder(&synth);
    let rep = evaluate(&enc, &synth.data, DEFAULT_RELEVANCE_THRESHOLD).unwrap();
    assert_eq!((rep.r1_i2t, rep.r1_t2i), (1.0, 1.0));
    assert!(rep.tau_i2t >= 0.99 && rep.tau_t2i >= 0.99, "{} {}", rep.tau_i2t, rep.tau_t2i);
    assert!((rep.rsum - 600.0).abs() < 1e-9);
}

#[test]
fn random_encoder_is_at_chance() {
    use rand::SeedableRng;
    let synth = make_synthetic(&SynthParams::default()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let enc = LinearEncoder::init(32, 32, 16, &mut rng).unwrap();
    let rep = evaluate(&enc, &synth.data, DEFAULT_RELEVANCE_THRESHOLD).unwrap();
    // Expected one hit in 1000 per direction; ten or more is a 1e-7 event.
    assert!(rep.r1_i2t < 0.01 && rep.r1_t2i < 0.01, "{} {}", rep.r1_i2t, rep.r1_t2i);
    assert!(rep.r10_i2t < 0.05);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let data = make_synthetic(&SynthParams { n: 300, ..Default::default() }).unwrap().data;
    let cfg = TrainConfig { lr: 0.0, epochs: 2, batch_size: 32, ..Default::default() };
    let out = train(&cfg, &data).unwrap();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    let init = LinearEncoder::init(32, 32, cfg.dim, &mut rng).unwrap();
    assert_eq!(out.encoder, init);
    assert_eq!(out.log.len(), 3);
    assert_eq!(out.log[0].tau(), out.last().tau());
}

#[test]
fn bcls_training_raises_held_out_tau() {
    let data = make_synthetic(&SynthParams::default()).unwrap().data;
    let cfg = TrainConfig { epochs: 5, ..Default::default() };
    let out = train(&cfg, &data).unwrap();
    let (first, last) = (out.log[0].tau(), out.last().tau());
    assert!(last >= first + 0.1, "{first} -> {last}");
}

#[test]
fn same_seed_same_run() {
    let data = make_synthetic(&SynthParams { n: 400, ..Default::default() }).unwrap().data;
    let cfg = TrainConfig { epochs: 3, batch_size: 64, lr: 0.002, ..Default::default() };
    let a = train(&cfg, &data).unwrap();
    let b = train(&cfg, &data).unwrap();
    assert_eq!(a.encoder, b.encoder);
    assert_eq!(a.log, b.log);
    let c = train(&TrainConfig { seed: 1, ..cfg }, &data).unwrap();
    assert_ne!(a.encoder, c.encoder);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let data = make_synthetic(&SynthParams { n: 300, ..Default::default() }).unwrap().data;
    let cfg = TrainConfig { epochs: 2, batch_size: 48, lr: 0.002, ..Default::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| train(&cfg, &data).unwrap())
    };
    let (one, many) = (run(1), run(4));
    assert_eq!(one.encoder, many.encoder);
    assert_eq!(one.log, many.log);
}

#[test]
fn every_loss_trains() {
    let data = make_synthetic(&SynthParams { n: 200, ..Default::default() }).unwrap().data;
    for loss in LossKind::ALL {
        let cfg = TrainConfig { epochs: 1, batch_size: 32, loss, ..Default::default() };
        let out = train(&cfg, &data).unwrap();
        assert!(out.last().loss.is_finite(), "{loss}");
    }
}

#[test]
fn config_errors() {
    let data = make_synthetic(&SynthParams { n: 100, ..Default::default() }).unwrap().data;
    assert!(train(&TrainConfig { batch_size: 500, ..Default::default() }, &data).is_err());
    assert!(train(&TrainConfig { lr: -1.0, ..Default::default() }, &data).is_err());
    let tiny = data.subset(&[0, 1, 2, 3, 4]);
    assert!(train(&TrainConfig { batch_size: 2, ..Default::default() }, &tiny).is_err());
}
