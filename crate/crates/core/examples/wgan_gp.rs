//! Conditional WGAN-GP on a toy two-class sequence set, trained through the library loop.
//!
//! `cargo run --release --example wgan_gp`

use rand::Rng;
use seqregen::encoder::Embeddings;
use seqregen::numerics::{derive_seed, seeded};
use seqregen::seqdata::{Dataset, LabelVector, LabelVocabulary, SequenceRecord};
use seqregen::seqgan::{sample_sequences, train_gan, GanTrainConfig, StepKind};

fn main() {
    let vocab = LabelVocabulary::new(vec!["poly-K".into(), "poly-E".into()]).unwrap();
    let mut rng = seeded(8);
    let mut records = Vec::new();
    let mut reps = Embeddings::new(2, 2).unwrap();
    for i in 0..256 {
        let c = i % 2;
        let base = if c == 0 { 'K' } else { 'E' };
        let s: String = (0..8).map(|_| if rng.random_bool(0.8) { base } else { 'G' }).collect();
        let id = format!("s{i}");
        reps.insert(id.clone(), vec![c as f32, 1.0 - c as f32]).unwrap();
        records.push(SequenceRecord::new(id, s).with_labels(LabelVector::from_bits(vec![c == 0, c == 1])));
    }
    let ds = Dataset::from_records(records, vocab, 8, 0.2, 1).unwrap();

    let cfg = GanTrainConfig { iterations: 400, lr: 1e-3, batch: 32, hidden: 64, channels: 8, noise: 8, tau: Some(0.2), seed: 2, ..Default::default() };
    let trained = train_gan(&ds, &reps, &cfg).unwrap();
    for it in (0..cfg.iterations).step_by(50) {
        let critic = trained.log.iter().rev().find(|l| l.iteration == it && l.kind == StepKind::Critic).unwrap();
        let gen = trained.log.iter().find(|l| l.iteration == it && l.kind == StepKind::Generator).unwrap();
        println!(
            "iter {it:>3}  W {:>7.3}  penalty {:>6.3}  class acc {:.2}  generator loss {:>8.3}",
            critic.wasserstein, critic.penalty, critic.class_accuracy, gen.loss
        );
    }
    if let Some(msg) = &trained.diverged {
        println!("stopped early: {msg}");
    }

    for c in 0..2 {
        let y = LabelVector::from_bits(vec![c == 0, c == 1]);
        let r = vec![c as f32, 1.0 - c as f32];
        let out = sample_sequences(&trained.gan, &vec![r; 6], &y, 6, derive_seed(3, c as u64)).unwrap();
        let seqs: Vec<&str> = out.iter().map(|r| r.residues.as_str()).collect();
        println!("{}: {seqs:?}", trained.gan.vocab.describe(&y));
    }
}
