//! The evaluation metrics on two toy families: k-mer MMD, MRR, diversity, identity and column entropy.
//!
//! `cargo run --example metrics`

use rand::Rng;
use seqregen::evalmetrics::{column_entropy, column_entropy_tsv, evaluate_sets, pairwise_identity, KernelConfig};
use seqregen::numerics::seeded;
use seqregen::seqdata::{LabelVector, LabelVocabulary, SequenceRecord};

fn family(motif: &str, n: usize, prefix: &str, f: usize, rng: &mut impl Rng) -> Vec<SequenceRecord> {
    let bg = b"ACDEFGHIKL";
    (0..n)
        .map(|i| {
            let mut s: String = (0..12).map(|_| bg[rng.random_range(0..bg.len())] as char).collect();
            s.insert_str(4, motif);
            let mut bits = vec![false, false];
            bits[f] = true;
            SequenceRecord::new(format!("{prefix}{f}_{i}"), s).with_labels(LabelVector::from_bits(bits))
        })
        .collect()
}

fn main() {
    let vocab = LabelVocabulary::new(vec!["FAM:A".into(), "FAM:B".into()]).unwrap();
    let mut rng = seeded(11);
    let mut real = family("WWMMYY", 30, "real", 0, &mut rng);
    real.extend(family("PPQQRR", 30, "real", 1, &mut rng));
    // A "generator" that got the motifs right.
    let mut gen = family("WWMMYY", 20, "gen", 0, &mut rng);
    gen.extend(family("PPQQRR", 20, "gen", 1, &mut rng));

    let report = evaluate_sets(&real, &gen, &vocab, &KernelConfig::default(), 1).unwrap();
    println!("{}", report.to_json().unwrap());

    println!("identity {:.1}%", pairwise_identity(&real[0].residues, &gen[0].residues).unwrap());
    let aln = ["MK-TAY", "MKQTAF", "MR-TA-", "MK-SAY"];
    print!("{}", column_entropy_tsv(&column_entropy(&aln).unwrap()));
}
