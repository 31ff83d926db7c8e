use bcls_core::io::*;
use bcls_core::trainer::{make_synthetic, train, SynthParams, TrainConfig};
use bcls_core::{Error, LossKind, Matrix};
use proptest::prelude::*;

proptest! {
    #[test]
    fn matrix_round_trip_at_f32_granularity(
        (rows, cols, data) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), proptest::collection::vec(-1e6f64..1e6, r * c))
        })
    ) {
        let m = Matrix::new(rows, cols, data).unwrap();
        let back = decode_matrix(&encode_matrix(&m).unwrap()).unwrap();
        prop_assert_eq!((back.rows(), back.cols()), (rows, cols));
        for (a, b) in m.as_slice().iter().zip(back.as_slice()) {
            prop_assert_eq!(*b, *a as f32 as f64);
        }
        // A second pass is lossless.
        prop_assert_eq!(decode_matrix(&encode_matrix(&back).unwrap()).unwrap(), back);
    }
}

#[test]
fn files_round_trip_without_leftovers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.bclm");
    let m = Matrix::from_rows(&[[0.5, -1.25], [3.0, 8.0]]).unwrap();
    write_matrix(&path, &m).unwrap();
    assert_eq!(read_matrix(&path).unwrap(), m);
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("m.bclm")]);
}

#[test]
fn failed_write_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("m.bclm");
    let m = Matrix::from_rows(&[[1.0]]).unwrap();
    assert!(matches!(write_matrix(&path, &m), Err(Error::Io(_))));
    assert!(!path.exists());
    let bad = Matrix::from_rows(&[[1e300]]).unwrap();
    let path = dir.path().join("big.bclm");
    assert!(write_matrix(&path, &bad).is_err());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn relevance_file_must_be_valid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.bclm");
    write_matrix(&path, &Matrix::from_rows(&[[1.0, 0.5], [0.5, 0.9]]).unwrap()).unwrap();
    assert!(matches!(read_relevance(&path), Err(Error::Format(_))));
    write_matrix(&path, &Matrix::from_rows(&[[1.0, 0.5], [-0.3, 1.0]]).unwrap()).unwrap();
    assert_eq!(read_relevance(&path).unwrap().get(1, 0), -0.3f32 as f64);
}

#[test]
fn checkpoint_round_trip() {
    let data = make_synthetic(&SynthParams { n: 200, ..Default::default() }).unwrap().data;
    let cfg = TrainConfig { epochs: 2, batch_size: 32, loss: LossKind::TripletSn, ..Default::default() };
    let out = train(&cfg, &data).unwrap();
    let meta = CheckpointMeta { config: cfg.clone().into(), image_dim: 32, text_dim: 32, log: out.log.clone() };
    let dir = tempfile::tempdir().unwrap();
    save_checkpoint(dir.path(), &out.encoder, &meta).unwrap();
    let (enc, back) = load_checkpoint(dir.path()).unwrap();
    assert_eq!(back, meta);
    assert_eq!(TrainConfig::from(back.config), cfg);
    for (a, b) in enc.w_v.as_slice().iter().zip(out.encoder.w_v.as_slice()) {
        assert_eq!(*a, *b as f32 as f64);
    }
    let tsv = std::fs::read_to_string(dir.path().join("log.tsv")).unwrap();
    let lines: Vec<&str> = tsv.lines().collect();
    assert_eq!(lines[0], "epoch\tloss\ttau_i2t\ttau_t2i\tr1_i2t\tr1_t2i");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("2\t"));
}

#[test]
fn config_file_rejects_unknown_keys() {
    let err = ConfigFile::parse(r#"{"lr": 0.01, "momentum": 0.9}"#).unwrap_err();
    assert!(err.to_string().contains("momentum"), "{err}");
    let cfg = ConfigFile::parse(r#"{"lr": 0.01, "loss": "kendall_sw_hs"}"#).unwrap();
    assert_eq!(TrainConfig::from(cfg).loss, LossKind::KendallSwHs);
}
