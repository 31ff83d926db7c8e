//! `bcls`: generate synthetic data, build relevance labels, train, evaluate,
//! score and gradient-check from the command line.
//!
//! Exit codes: 0 success, 1 failed gradcheck, 2 usage, IO or format error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bcls_core::gradcheck::{self, TOLERANCE};
use bcls_core::io::{self, CheckpointMeta, ConfigFile};
use bcls_core::pseudo_label::{alpha_statistic, relevance_from_text_similarity, CaptionGroups};
use bcls_core::trainer::{self, Dataset, SynthParams, TrainConfig, DEFAULT_RELEVANCE_THRESHOLD};
use bcls_core::{par, Error, Hyperparams, LossKind, Result, SimilarityMatrix};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const THREADS_ENV: &str = "BCLS_THREADS";

#[derive(Parser)]
#[command(name = "bcls", version, about = "Ranking losses with continuous relevance labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic paired dataset with latent-cosine relevance.
    GenSynth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 16)]
        dz: usize,
        #[arg(long, default_value_t = 32)]
        dv: usize,
        #[arg(long, default_value_t = 32)]
        dt: usize,
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Turn a caption similarity matrix into relevance labels.
    Labels {
        #[arg(long)]
        text_sim: PathBuf,
        /// JSON list of caption-index lists, one per image.
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a linear encoder and write a checkpoint directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on a dataset directory.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Split::Holdout)]
        split: Split,
        #[arg(long, default_value_t = DEFAULT_RELEVANCE_THRESHOLD)]
        threshold: f64,
    },
    /// Score a precomputed image x text score matrix.
    Metrics {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        relevance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RELEVANCE_THRESHOLD)]
        threshold: f64,
    },
    /// Compare analytic loss gradients with central finite differences.
    Gradcheck {
        #[arg(long)]
        loss: LossKind,
        #[arg(long, default_value_t = 8)]
        b: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also differentiate through a random linear encoder.
        #[arg(long)]
        end_to_end: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    /// The last fifth of the items, as held out during training.
    Holdout,
    All,
}

#[derive(Serialize)]
struct Manifest {
    #[serde(flatten)]
    params: SynthParams,
    files: [&'static str; 4],
}

fn load_dataset(dir: &Path) -> Result<Dataset> {
    Dataset::new(
        io::read_matrix(&dir.join("image.bclm"))?,
        io::read_matrix(&dir.join("text.bclm"))?,
        io::read_relevance(&dir.join("relevance.bclm"))?,
    )
}

fn gen_synth(params: SynthParams, out_dir: &Path) -> Result<()> {
    let synth = trainer::make_synthetic(&params)?;
    fs::create_dir_all(out_dir)?;
    let files = ["image.bclm", "text.bclm", "relevance.bclm", "latent.bclm"];
    let d = &synth.data;
    for (name, m) in files.iter().zip([&d.image, &d.text, d.relevance.matrix(), &synth.latent]) {
        io::write_matrix(&out_dir.join(name), m)?;
    }
    io::write_json(&out_dir.join("manifest.json"), &Manifest { params, files })?;
    println!("wrote {} items to {}", params.n, out_dir.display());
    Ok(())
}

fn labels(text_sim: &Path, groups: &Path, out: &Path) -> Result<()> {
    let sim = SimilarityMatrix::new(io::read_matrix(text_sim)?);
    let raw: Vec<Vec<usize>> = serde_json::from_str(&fs::read_to_string(groups)?)?;
    let groups = CaptionGroups::new(raw, sim.rows())?;
    let relevance = relevance_from_text_similarity(&sim, &groups.pairing())?;
    let alpha = alpha_statistic(&sim, &groups)?;
    io::write_matrix(out, relevance.matrix())?;
    println!("alpha_statistic={alpha:.6}");
    Ok(())
}

fn train(config: Option<&Path>, data_dir: &Path, out: &Path) -> Result<()> {
    let file = match config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = TrainConfig::from(file.clone());
    let data = load_dataset(data_dir)?;
    let outcome = trainer::train(&cfg, &data)?;
    let meta =
        CheckpointMeta { config: file, image_dim: data.image.cols(), text_dim: data.text.cols(), log: outcome.log };
    io::save_checkpoint(out, &outcome.encoder, &meta)?;
    print!("{}", io::epoch_log_tsv(&meta.log));
    Ok(())
}

fn eval(checkpoint: &Path, data_dir: &Path, split: Split, threshold: f64) -> Result<()> {
    let (encoder, meta) = io::load_checkpoint(checkpoint)?;
    let data = load_dataset(data_dir)?;
    if data.image.cols() != meta.image_dim || data.text.cols() != meta.text_dim {
        return Err(Error::BadDims(format!(
            "checkpoint expects {}/{} feature dims, data has {}/{}",
            meta.image_dim,
            meta.text_dim,
            data.image.cols(),
            data.text.cols()
        )));
    }
    let data = match split {
        Split::Holdout => data.split_holdout()?.1,
        Split::All => data,
    };
    let report = trainer::evaluate(&encoder, &data, threshold)?;
    print!("{}", io::report_tsv(&report));
    Ok(())
}

fn metrics(scores: &Path, relevance: &Path, threshold: f64) -> Result<()> {
    let scores = io::read_matrix(scores)?;
    let relevance = io::read_relevance(relevance)?;
    let report = trainer::score_report(&scores, relevance.matrix(), threshold)?;
    print!("{}", io::report_tsv(&report));
    Ok(())
}

fn gradcheck(loss: LossKind, b: usize, trials: usize, seed: u64, end_to_end: bool) -> Result<bool> {
    if b < 2 || trials == 0 {
        return Err(Error::BadConfig(format!("need --b >= 2 and --trials >= 1, got {b} and {trials}")));
    }
    let hp = Hyperparams::default();
    let rep = gradcheck::check_loss(loss, &hp, b, trials, seed)?;
    println!("loss={loss} b={b} trials={trials} rejected={}", rep.rejected);
    println!("max_relative_error={:.3e}", rep.max_relative_error);
    let mut ok = rep.passed();
    if end_to_end {
        let e2e = gradcheck::check_end_to_end(loss, &hp, b, trials, seed)?;
        println!("end_to_end_max_relative_error={:.3e}", e2e.max_relative_error);
        ok &= e2e.passed();
    }
    println!("{} (tolerance {TOLERANCE:.0e})", if ok { "PASS" } else { "FAIL" });
    Ok(ok)
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            par::configure_threads(n);
            Ok(())
        }
        _ => Err(Error::BadConfig(format!("{THREADS_ENV} must be a positive integer, got '{value}'"))),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::GenSynth { n, dz, dv, dt, noise, seed, out_dir } => {
            let params = SynthParams { n, d_z: dz, d_v: dv, d_t: dt, noise_sigma: noise, seed };
            gen_synth(params, &out_dir)?;
        }
        Command::Labels { text_sim, groups, out } => labels(&text_sim, &groups, &out)?,
        Command::Train { config, data_dir, out } => train(config.as_deref(), &data_dir, &out)?,
        Command::Eval { checkpoint, data_dir, split, threshold } => eval(&checkpoint, &data_dir, split, threshold)?,
        Command::Metrics { scores, relevance, threshold } => metrics(&scores, &relevance, threshold)?,
        Command::Gradcheck { loss, b, trials, seed, end_to_end } => {
            if !gradcheck(loss, b, trials, seed, end_to_end)? {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
