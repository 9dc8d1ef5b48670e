//! Two-family toy corpus with planted motifs.

use rand::Rng;

use crate::numerics::{derive_seed, seeded};
use crate::seqdata::{write_fasta, write_labels, LabelVector, LabelVocabulary, SequenceRecord, CANONICAL};

/// Layout of the synthetic families.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub length: usize,
    /// Motif occupies `motif_start..=motif_end` (0-based).
    pub motif_start: usize,
    pub motif_end: usize,
    pub per_family: usize,
    /// Letters the background is drawn from.
    pub background: String,
    pub families: Vec<String>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            length: 64,
            motif_start: 10,
            motif_end: 25,
            per_family: 500,
            background: CANONICAL[..10].to_string(),
            families: vec!["FAM:A".into(), "FAM:B".into()],
        }
    }
}

/// Generated records plus their on-disk text forms.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<SequenceRecord>,
    pub vocab: LabelVocabulary,
    pub motifs: Vec<String>,
    pub fasta: String,
    pub labels_tsv: String,
    pub vocab_text: String,
}

/// One fixed motif per family over the full canonical alphabet, then
/// `per_family` sequences each; ids are `fam{f}_{i}`.
pub fn synthetic_families(spec: &SyntheticSpec, seed: u64) -> SyntheticCorpus {
    let canon = CANONICAL.as_bytes();
    let bg = spec.background.as_bytes();
    let motif_len = spec.motif_end + 1 - spec.motif_start;
    let vocab = LabelVocabulary::new(spec.families.clone()).expect("distinct family names");
    let mut motif_rng = seeded(derive_seed(seed, 0));
    let motifs: Vec<String> = spec
        .families
        .iter()
        .map(|_| (0..motif_len).map(|_| canon[motif_rng.random_range(0..canon.len())] as char).collect())
        .collect();
    let mut rng = seeded(derive_seed(seed, 1));
    let mut records = Vec::with_capacity(spec.families.len() * spec.per_family);
    for (f, motif) in motifs.iter().enumerate() {
        let mut bits = vec![false; spec.families.len()];
        bits[f] = true;
        for i in 0..spec.per_family {
            let mut s: Vec<u8> = (0..spec.length).map(|_| bg[rng.random_range(0..bg.len())]).collect();
            s[spec.motif_start..=spec.motif_end].copy_from_slice(motif.as_bytes());
            let r = SequenceRecord::new(format!("fam{f}_{i}"), String::from_utf8(s).expect("ascii"))
                .with_labels(LabelVector::from_bits(bits.clone()));
            records.push(r);
        }
    }
    let fasta = write_fasta(&records);
    let labels_tsv = write_labels(records.iter().map(|r| (r.id.as_str(), &r.labels)), &vocab);
    let vocab_text = vocab.to_text();
    SyntheticCorpus { records, vocab, motifs, fasta, labels_tsv, vocab_text }
}
