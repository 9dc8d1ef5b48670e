//! Full CLI pipeline on the two-family synthetic corpus.
//!
//! `cargo run --release --example synthetic_pipeline -- [workdir]`

use std::path::PathBuf;
use std::time::Instant;

use seqregen::fsio;
use seqregen::pipeline::run_args;
use seqregen::synthetic::{synthetic_families, SyntheticSpec};

fn step(args: &[&str]) {
    let t = Instant::now();
    let code = run_args(args);
    eprintln!("[{:>6.1}s] {} -> exit {code}", t.elapsed().as_secs_f64(), args[0]);
    assert_eq!(code, 0, "{args:?}");
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("seqregen_synthetic"));
    std::fs::create_dir_all(&dir).unwrap();
    let p = |f: &str| dir.join(f).display().to_string();

    let corpus = synthetic_families(&SyntheticSpec::default(), 42);
    fsio::write_atomic(&dir.join("all.fasta"), corpus.fasta.as_bytes()).unwrap();
    fsio::write_atomic(&dir.join("all.tsv"), corpus.labels_tsv.as_bytes()).unwrap();
    fsio::write_atomic(&dir.join("vocab.txt"), corpus.vocab_text.as_bytes()).unwrap();

    let env = |k: &str, d: &str| std::env::var(k).unwrap_or_else(|_| d.to_string());
    let (enc_epochs, diff_iters, gan_iters) = (env("ENC_EPOCHS", "6"), env("DIFF_ITERS", "1500"), env("GAN_ITERS", "500"));
    let (beta, tau) = (env("BETA", "175"), env("TAU", "0.2"));

    step(&["ingest", "--fasta", &p("all.fasta"), "--labels", &p("all.tsv"), "--vocab", &p("vocab.txt"),
        "--max-len", "64", "--val-fraction", "0.2", "--seed", "1", "--out", &p("data")]);
    step(&["train-encoder", "--data", &p("data"), "--dim", "32", "--lr", "1e-3", "--batch", "32",
        "--epochs", &enc_epochs, "--seed", "2", "--out", &p("encoder.prgc")]);
    step(&["embed", "--encoder", &p("encoder.prgc"), "--data", &p("data"), "--out", &p("reps.prgc")]);
    step(&["train-diffusion", "--reps", &p("reps.prgc"), "--data", &p("data"), "--steps", "100",
        "--p-uncond", "0.1", "--lr", "1e-3", "--batch", "64", "--iterations", &diff_iters, "--seed", "3",
        "--out", &p("diffusion.prgc")]);
    step(&["train-gan", "--data", &p("data"), "--reps", &p("reps.prgc"), "--beta", &beta, "--lambda", "10",
        "--n-critic", "5", "--lr", "1e-4", "--batch", "64", "--iterations", &gan_iters, "--tau", &tau, "--seed", "4",
        "--out", &p("gan.prgc")]);
    let mut gens = String::new();
    for (i, fam) in corpus.vocab.terms().iter().enumerate() {
        let out = p(&format!("gen_{i}.fasta"));
        step(&["sample", "--diffusion", &p("diffusion.prgc"), "--gan", &p("gan.prgc"), "--labels", fam,
            "--n", "100", "--seed", &(7 + i).to_string(), "--out", &out]);
        gens.push_str(&fsio::read_string(std::path::Path::new(&out)).unwrap().replace(">gen_", &format!(">f{i}_gen_")));
    }
    fsio::write_atomic(&dir.join("gen.fasta"), gens.as_bytes()).unwrap();
    step(&["evaluate", "--real", &p("data/val.fasta"), "--gen", &p("gen.fasta"), "--labels", &p("data/labels.tsv"),
        "--vocab", &p("data/vocab.txt"), "--kmer", "3", "--report", &p("report.json")]);
    println!("{}", fsio::read_string(&dir.join("report.json")).unwrap());
}
