//! Command-line front end. [`run`] maps every outcome to an exit code.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::config::RunConfig;
use super::manifest::{manifest_path, ManifestBuilder};
use super::sample::two_stage_sample;
use crate::checkpoint::Checkpoint;
use crate::encoder::{embed_dataset, load_external_embeddings, train_encoder, Encoder, EncoderConfig, EncoderTrainConfig};
use crate::error::{Error, Result};
use crate::evalmetrics::{
    column_entropy, column_entropy_tsv, evaluate_sets, export_features, kmer_features, Bandwidth, KernelConfig,
};
use crate::fsio;
use crate::latentdiff::{train_diffusion, DiffusionTrainConfig, LatentDiffusion};
use crate::seqdata::{
    encode_one_hot, ingest, parse_aligned_fasta, parse_fasta, parse_labels, write_fasta, Alphabet, Dataset,
    LabelVector, LabelVocabulary, SequenceRecord,
};
use crate::seqgan::{train_gan, GanTrainConfig, SeqGan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "seqregen", version, about = "Annotation-conditioned sequence generation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// key=value file; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, filter, label and split a FASTA file into a dataset directory
    Ingest(IngestArgs),
    /// Train the annotation classifier whose residual block gives representations
    TrainEncoder(TrainEncoderArgs),
    /// Compute representations for every record of a dataset
    Embed(EmbedArgs),
    /// Train the conditional latent diffusion model
    TrainDiffusion(TrainDiffusionArgs),
    /// Train the conditional WGAN-GP sequence decoder
    TrainGan(TrainGanArgs),
    /// Draw sequences for a label set: representation first, then sequence
    Sample(SampleArgs),
    /// Compare generated and real sequences
    Evaluate(EvaluateArgs),
    /// Per-column Shannon entropy of an aligned FASTA
    Entropy(EntropyArgs),
    /// Export k-mer or encoder features as TSV
    Features(FeaturesArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long = "max-len")]
    pub max_len: Option<usize>,
    #[arg(long = "val-fraction")]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainEncoderArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub blocks: Option<usize>,
    #[arg(long = "freeze-backbone")]
    pub freeze_backbone: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub encoder: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long = "pad-to")]
    pub pad_to: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainDiffusionArgs {
    #[arg(long)]
    pub reps: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long = "p-uncond")]
    pub p_uncond: Option<f64>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub schedule: Option<crate::latentdiff::ScheduleKind>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct TrainGanArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub reps: PathBuf,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "n-critic")]
    pub n_critic: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub diffusion: PathBuf,
    #[arg(long)]
    pub gan: PathBuf,
    /// Label terms separated by `;` or `,`
    #[arg(long)]
    pub labels: String,
    #[arg(long)]
    pub guidance: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub real: PathBuf,
    #[arg(long)]
    pub gen: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub kmer: Option<usize>,
    /// Fixed kernel bandwidth; the median heuristic is used when absent
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub report: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[arg(long)]
    pub alignment: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub fasta: PathBuf,
    #[arg(long)]
    pub encoder: Option<PathBuf>,
    #[arg(long)]
    pub kmer: Option<usize>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::TrainEncoder(a) => cmd_train_encoder(a),
        Command::Embed(a) => cmd_embed(a),
        Command::TrainDiffusion(a) => cmd_train_diffusion(a),
        Command::TrainGan(a) => cmd_train_gan(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::Features(a) => cmd_features(a),
    }
}

macro_rules! overrides {
    ($cfg:ident, $args:ident; $($field:ident => $key:ident),* $(,)?) => {
        $( if let Some(v) = $args.$field.clone() { $cfg.$key = v; } )*
    };
}

fn load_config(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::parse(&fsio::read_string(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn manifest(command: &str, cfg: &RunConfig) -> ManifestBuilder {
    ManifestBuilder::new(command, cfg.to_map(), cfg.seed)
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; max_len => max_len, val_fraction => val_fraction, seed => seed);
    cfg.validate()?;
    let mut m = manifest("ingest", &cfg);
    for p in [&a.fasta, &a.labels, &a.vocab] {
        m.input(p)?;
    }
    let (ds, report) = ingest(
        &fsio::read_string(&a.fasta)?,
        &fsio::read_string(&a.labels)?,
        &fsio::read_string(&a.vocab)?,
        cfg.max_len,
        cfg.val_fraction,
        cfg.seed,
    )?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    ds.save(&a.out)?;
    log::info!(
        "ingest: parsed {} dropped {} non-standard, {} unlabelled; train {} val {}",
        report.parsed,
        report.dropped_nonstandard,
        report.dropped_unlabeled,
        report.train,
        report.val
    );
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, true))?;
    Ok(())
}

fn cmd_train_encoder(a: TrainEncoderArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; dim => dim, lr => lr, batch => batch, epochs => epochs, seed => seed,
        width => encoder_width, blocks => encoder_blocks);
    cfg.freeze_backbone |= a.freeze_backbone;
    cfg.validate()?;
    let mut m = manifest("train-encoder", &cfg);
    m.input(&a.data)?;
    let ds = Dataset::load(&a.data)?;
    let mut arch = EncoderConfig::new(ds.max_len, ds.label_count(), cfg.dim);
    arch.width = cfg.encoder_width;
    arch.blocks = cfg.encoder_blocks;
    arch.freeze_backbone = cfg.freeze_backbone;
    let tc = EncoderTrainConfig { lr: cfg.lr, batch: cfg.batch, epochs: cfg.epochs, seed: cfg.seed };
    let trained = train_encoder(&ds, arch, &tc)?;
    let mut ck = trained.model.to_checkpoint()?;
    if let Some(acc) = trained.final_val_accuracy() {
        ck.set_meta("val_accuracy", acc);
        log::info!("encoder validation micro-accuracy {acc:.4}");
    }
    ck.set_meta("vocab", ds.vocab.terms().join(";"));
    ck.save(&a.out)?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    Ok(())
}

fn cmd_embed(a: EmbedArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    if let Some(p) = a.pad_to {
        cfg.pad_to = Some(p);
    }
    let mut m = manifest("embed", &cfg);
    m.input(&a.encoder)?;
    m.input(&a.data)?;
    let model = Encoder::<f32>::from_checkpoint(&Checkpoint::load(&a.encoder)?)?;
    let ds = Dataset::load(&a.data)?;
    let pad_to = cfg.pad_to.unwrap_or(model.config().rep_dim);
    embed_dataset(&model, &ds, pad_to)?.save(&a.out)?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    Ok(())
}

fn cmd_train_diffusion(a: TrainDiffusionArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; steps => steps, p_uncond => p_uncond, lr => lr, batch => batch, seed => seed,
        iterations => diffusion_iterations, schedule => schedule);
    cfg.validate()?;
    let mut m = manifest("train-diffusion", &cfg);
    m.input(&a.reps)?;
    m.input(&a.data)?;
    let reps = load_external_embeddings(&a.reps)?;
    let ds = Dataset::load(&a.data)?;
    let labels: Vec<(String, LabelVector)> = ds.train.iter().map(|r| (r.id.clone(), r.labels.clone())).collect();
    let tc = DiffusionTrainConfig {
        steps: cfg.steps,
        schedule: cfg.schedule,
        p_uncond: cfg.p_uncond,
        lr: cfg.lr,
        batch: cfg.batch,
        iterations: cfg.diffusion_iterations,
        seed: cfg.seed,
        hidden: cfg.diffusion_hidden,
        blocks: cfg.diffusion_blocks,
        chunk: cfg.chunk,
    };
    let trained = train_diffusion(&reps, &labels, &ds.vocab, &tc)?;
    trained.diffusion.to_checkpoint()?.save(&a.out)?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    Ok(())
}

fn cmd_train_gan(a: TrainGanArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; beta => beta, lambda => lambda, n_critic => n_critic, lr => lr, batch => batch,
        seed => seed, iterations => gan_iterations);
    if a.tau.is_some() {
        cfg.tau = a.tau;
    }
    cfg.validate()?;
    let mut m = manifest("train-gan", &cfg);
    m.input(&a.data)?;
    m.input(&a.reps)?;
    let ds = Dataset::load(&a.data)?;
    let reps = load_external_embeddings(&a.reps)?;
    let tc = GanTrainConfig {
        lambda: cfg.lambda,
        beta: cfg.beta,
        n_critic: cfg.n_critic,
        lr: cfg.lr,
        batch: cfg.batch,
        iterations: cfg.gan_iterations,
        seed: cfg.seed,
        tau: cfg.tau,
        noise: cfg.noise,
        hidden: cfg.gan_hidden,
        channels: cfg.channels,
    };
    let trained = train_gan(&ds, &reps, &tc)?;
    trained.gan.to_checkpoint()?.save(&a.out)?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    match trained.diverged {
        Some(msg) => Err(Error::Diverged(format!("{msg}; last good weights saved to {}", a.out.display()))),
        None => Ok(()),
    }
}

fn parse_terms(text: &str) -> Vec<&str> {
    text.split([';', ',']).map(str::trim).filter(|t| !t.is_empty()).collect()
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; n => n, seed => seed);
    if a.guidance.is_some() {
        cfg.guidance = a.guidance;
    }
    cfg.validate()?;
    let mut m = manifest("sample", &cfg);
    m.input(&a.diffusion)?;
    m.input(&a.gan)?;
    let diffusion = LatentDiffusion::from_checkpoint(&Checkpoint::load(&a.diffusion)?)?;
    let gan = SeqGan::from_checkpoint(&Checkpoint::load(&a.gan)?)?;
    if diffusion.vocab != gan.vocab {
        return Err(Error::Config("diffusion and GAN checkpoints use different label vocabularies".into()));
    }
    let terms = parse_terms(&a.labels);
    if terms.is_empty() {
        return Err(Error::Config("--labels needs at least one term".into()));
    }
    let y = diffusion.vocab.encode(&terms)?;
    let records = two_stage_sample(&y, cfg.n, &diffusion, &gan, cfg.guidance, cfg.seed)?;
    fsio::write_atomic(&a.out, write_fasta(&records).as_bytes())?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    Ok(())
}

/// Attaches labels from `table`; records missing there fall back to header terms.
fn attach_labels(
    records: Vec<SequenceRecord>,
    table: &BTreeMap<String, LabelVector>,
    vocab: &LabelVocabulary,
    use_headers: bool,
) -> Result<Vec<SequenceRecord>> {
    let mut out = Vec::with_capacity(records.len());
    let mut skipped = 0usize;
    for r in records {
        let labels = match table.get(&r.id) {
            Some(l) => Some(l.clone()),
            None if use_headers && !r.description.trim().is_empty() => {
                Some(vocab.encode(&parse_terms(&r.description))?)
            }
            None => None,
        };
        match labels {
            Some(l) if l.any() => out.push(r.with_labels(l)),
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} record(s) without labels skipped");
    }
    Ok(out)
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; kmer => kmer, seed => seed);
    cfg.validate()?;
    let mut m = manifest("evaluate", &cfg);
    for p in [&a.real, &a.gen, &a.labels, &a.vocab] {
        m.input(p)?;
    }
    let vocab = LabelVocabulary::parse(&fsio::read_string(&a.vocab)?)?;
    let table = parse_labels(&fsio::read_string(&a.labels)?, &vocab)?;
    let real = attach_labels(parse_fasta(&fsio::read_string(&a.real)?)?, &table, &vocab, false)?;
    let gen = attach_labels(parse_fasta(&fsio::read_string(&a.gen)?)?, &table, &vocab, true)?;
    let bandwidth = match a.bandwidth {
        Some(s) => Bandwidth::Fixed(s),
        None => Bandwidth::Median,
    };
    let kernel = KernelConfig { bandwidth, k: cfg.kmer };
    let report = evaluate_sets(&real, &gen, &vocab, &kernel, cfg.seed)?;
    fsio::write_atomic(&a.report, report.to_json()?.as_bytes())?;
    m.output(&a.report)?;
    m.finish(&manifest_path(&a.report, false))?;
    Ok(())
}

fn cmd_entropy(a: EntropyArgs) -> Result<()> {
    let cfg = RunConfig::default();
    let mut m = manifest("entropy", &cfg);
    m.input(&a.alignment)?;
    let rows: Vec<String> = parse_aligned_fasta(&fsio::read_string(&a.alignment)?)?
        .into_iter()
        .map(|r| r.residues)
        .collect();
    let e = column_entropy(&rows)?;
    let flagged = e.all_gap.iter().filter(|&&g| g).count();
    if flagged > 0 {
        log::warn!("{flagged} all-gap column(s)");
    }
    fsio::write_atomic(&a.out, column_entropy_tsv(&e).as_bytes())?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    Ok(())
}

/// Encoder representations for arbitrary records.
pub fn encoder_features(model: &Encoder<f32>, records: &[SequenceRecord]) -> Result<Vec<Vec<f32>>> {
    let alphabet = Alphabet::protein();
    let l = model.config().max_len;
    let width = l * alphabet.size();
    let mut out = Vec::with_capacity(records.len());
    for chunk in records.chunks(128) {
        let mut data = vec![0f32; chunk.len() * width];
        for (r, row) in chunk.iter().zip(data.chunks_mut(width)) {
            encode_one_hot(&r.id, &r.residues, l, &alphabet)?.write_one_hot(row);
        }
        let (_, rep) = model.encode(&crate::numerics::Tensor::new(vec![chunk.len(), width], data)?)?;
        out.extend((0..chunk.len()).map(|i| rep.row(i).to_vec()));
    }
    Ok(out)
}

fn cmd_features(a: FeaturesArgs) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    overrides!(cfg, a; kmer => kmer);
    cfg.validate()?;
    let mut m = manifest("features", &cfg);
    m.input(&a.fasta)?;
    let mut records = parse_fasta(&fsio::read_string(&a.fasta)?)?;
    let vocab = match (&a.labels, &a.vocab) {
        (Some(lp), Some(vp)) => {
            m.input(lp)?;
            m.input(vp)?;
            let vocab = LabelVocabulary::parse(&fsio::read_string(vp)?)?;
            let table = parse_labels(&fsio::read_string(lp)?, &vocab)?;
            for r in records.iter_mut() {
                r.labels = table.get(&r.id).cloned().unwrap_or_else(|| LabelVector::zeros(vocab.len()));
            }
            Some(vocab)
        }
        (None, None) => None,
        _ => return Err(Error::Config("--labels and --vocab must be given together".into())),
    };
    let feats: Vec<Vec<f32>> = match &a.encoder {
        Some(path) => {
            m.input(path)?;
            encoder_features(&Encoder::<f32>::from_checkpoint(&Checkpoint::load(path)?)?, &records)?
        }
        None => records
            .iter()
            .map(|r| Ok(kmer_features(&r.residues, cfg.kmer)?.to_dense().iter().map(|&v| v as f32).collect()))
            .collect::<Result<_>>()?,
    };
    fsio::write_atomic(&a.out, export_features(&records, &feats, vocab.as_ref())?.as_bytes())?;
    m.output(&a.out)?;
    m.finish(&manifest_path(&a.out, false))?;
    Ok(())
}

/// Convenience for library callers: `run` with a program name prepended.
pub fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("seqregen").chain(args.iter().copied()))
}

