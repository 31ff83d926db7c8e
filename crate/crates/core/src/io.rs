//! On-disk formats: `.bclm` matrix files, the JSON training config, the
//! checkpoint directory and the TSV reports.
//!
//! A `.bclm` file is a 24-byte header followed by the payload:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "BCLM"
//! 4       4     version, u32 LE (= 1)
//! 8       8     rows, u64 LE
//! 16      8     cols, u64 LE
//! 24      4*r*c entries, f32 LE, row-major
//! ```
//!
//! Every file is written to a temporary sibling first and renamed into place.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{Hyperparams, LossKind};
use crate::matrix::{Matrix, RelevanceMatrix};
use crate::trainer::{EpochLog, EvalReport, LinearEncoder, OptimizerKind, TrainConfig};

pub const MAGIC: &[u8; 4] = b"BCLM";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub fn encode_matrix(m: &Matrix) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * m.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for (k, &v) in m.as_slice().iter().enumerate() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::Format(format!("entry {k} ({v}) does not fit in f32")));
        }
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let expected =
        rows.checked_mul(cols).and_then(|n| n.checked_mul(4)).ok_or_else(|| Error::Format("shape overflows".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != expected {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {expected} for {rows}x{cols}",
            payload.len()
        )));
    }
    let data = payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64).collect();
    Matrix::new(rows as usize, cols as usize, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    decode_matrix(&fs::read(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_atomic(path, &encode_matrix(m)?)
}

pub fn read_relevance(path: &Path) -> Result<RelevanceMatrix> {
    RelevanceMatrix::new(read_matrix(path)?).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::Format(format!("{} has no file name", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let res = fs::write(&tmp, bytes).and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// JSON training configuration. Missing keys take their defaults; unknown
/// keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub margin: f64,
    pub kendall_margin: f64,
    pub lr: f64,
    pub lr_decay_epoch: usize,
    pub lr_decay_factor: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dim: usize,
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
}

impl Default for ConfigFile {
    fn default() -> Self {
        TrainConfig::default().into()
    }
}

impl From<TrainConfig> for ConfigFile {
    fn from(c: TrainConfig) -> Self {
        let hp = c.hyperparams;
        Self {
            alpha: hp.alpha,
            beta: hp.beta,
            gamma: hp.gamma,
            margin: hp.margin,
            kendall_margin: hp.kendall_margin,
            lr: c.lr,
            lr_decay_epoch: c.lr_decay_epoch,
            lr_decay_factor: c.lr_decay_factor,
            epochs: c.epochs,
            batch_size: c.batch_size,
            seed: c.seed,
            dim: c.dim,
            loss: c.loss,
            optimizer: c.optimizer,
        }
    }
}

impl From<ConfigFile> for TrainConfig {
    fn from(c: ConfigFile) -> Self {
        TrainConfig {
            batch_size: c.batch_size,
            epochs: c.epochs,
            lr: c.lr,
            lr_decay_epoch: c.lr_decay_epoch,
            lr_decay_factor: c.lr_decay_factor,
            seed: c.seed,
            dim: c.dim,
            hyperparams: Hyperparams {
                margin: c.margin,
                gamma: c.gamma,
                alpha: c.alpha,
                beta: c.beta,
                kendall_margin: c.kendall_margin,
            },
            loss: c.loss,
            optimizer: c.optimizer,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = serde_json::from_str(text)?;
        TrainConfig::from(cfg.clone()).validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// File names inside a checkpoint directory.
pub struct CheckpointPaths {
    pub w_v: PathBuf,
    pub w_t: PathBuf,
    pub meta: PathBuf,
    pub log: PathBuf,
}

impl CheckpointPaths {
    pub fn new(dir: &Path) -> Self {
        Self {
            w_v: dir.join("w_v.bclm"),
            w_t: dir.join("w_t.bclm"),
            meta: dir.join("checkpoint.json"),
            log: dir.join("log.tsv"),
        }
    }
}

/// JSON sidecar of a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub config: ConfigFile,
    pub image_dim: usize,
    pub text_dim: usize,
    pub log: Vec<EpochLog>,
}

pub fn save_checkpoint(dir: &Path, encoder: &LinearEncoder, meta: &CheckpointMeta) -> Result<()> {
    fs::create_dir_all(dir)?;
    let p = CheckpointPaths::new(dir);
    write_matrix(&p.w_v, &encoder.w_v)?;
    write_matrix(&p.w_t, &encoder.w_t)?;
    write_json(&p.meta, meta)?;
    write_atomic(&p.log, epoch_log_tsv(&meta.log).as_bytes())
}

pub fn load_checkpoint(dir: &Path) -> Result<(LinearEncoder, CheckpointMeta)> {
    let p = CheckpointPaths::new(dir);
    let encoder = LinearEncoder::new(read_matrix(&p.w_v)?, read_matrix(&p.w_t)?)?;
    let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(&p.meta)?)?;
    Ok((encoder, meta))
}

/// `epoch, loss, tau_i2t, tau_t2i, r1_i2t, r1_t2i`; recalls in percent.
pub fn epoch_log_tsv(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch\tloss\ttau_i2t\ttau_t2i\tr1_i2t\tr1_t2i\n");
    for e in log {
        writeln!(
            out,
            "{}\t{:.6}\t{:.4}\t{:.4}\t{:.1}\t{:.1}",
            e.epoch,
            e.loss,
            e.tau_i2t,
            e.tau_t2i,
            100.0 * e.r1_i2t,
            100.0 * e.r1_t2i
        )
        .unwrap();
    }
    out
}

fn pct(v: f64) -> f64 {
    (1000.0 * v).round() / 10.0
}

/// Two-column `metric\tvalue` report, every metric in percent with one
/// decimal. RSUM is the sum of the six printed recalls.
pub fn report_tsv(r: &EvalReport) -> String {
    let recalls = r.recalls().map(pct);
    let rows = [
        ("r1_i2t", recalls[0]),
        ("r5_i2t", recalls[1]),
        ("r10_i2t", recalls[2]),
        ("r1_t2i", recalls[3]),
        ("r5_t2i", recalls[4]),
        ("r10_t2i", recalls[5]),
        ("rsum", crate::metrics::rsum(&recalls)),
        ("tau_i2t", pct(r.tau_i2t)),
        ("tau_t2i", pct(r.tau_t2i)),
        ("map_r_i2t", pct(r.map_r_i2t)),
        ("map_r_t2i", pct(r.map_r_t2i)),
        ("rp_i2t", pct(r.rp_i2t)),
        ("rp_t2i", pct(r.rp_t2i)),
    ];
    let mut out = String::from("metric\tvalue\n");
    for (name, v) in rows {
        writeln!(out, "{name}\t{v:.1}").unwrap();
    }
    out
}
