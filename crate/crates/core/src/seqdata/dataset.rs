use std::collections::BTreeMap;
use std::path::Path;

use super::alphabet::Alphabet;
use super::encode::encode_one_hot;
use super::fasta::{parse_fasta, write_fasta, SequenceRecord};
use super::labels::{parse_labels, write_labels, LabelVector, LabelVocabulary};
use super::split::split_indices;
use super::filter_nonstandard;
use crate::error::{Error, Result};
use crate::fsio;
use crate::numerics::{Real, Tensor};

/// Labelled records split into train and validation, with the encoding parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<SequenceRecord>,
    pub val: Vec<SequenceRecord>,
    pub alphabet: Alphabet,
    pub vocab: LabelVocabulary,
    pub max_len: usize,
}

/// Counts from [`ingest`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestReport {
    pub parsed: usize,
    pub dropped_nonstandard: usize,
    pub dropped_unlabeled: usize,
    pub train: usize,
    pub val: usize,
}

/// Parse, filter, label and split raw inputs.
pub fn ingest(
    fasta: &str,
    labels_tsv: &str,
    vocab_text: &str,
    max_len: usize,
    val_fraction: f64,
    seed: u64,
) -> Result<(Dataset, IngestReport)> {
    let vocab = LabelVocabulary::parse(vocab_text)?;
    let labels = parse_labels(labels_tsv, &vocab)?;
    let parsed = parse_fasta(fasta)?;
    let n_parsed = parsed.len();
    let (clean, dropped_nonstandard) = filter_nonstandard(parsed);
    let mut labelled = Vec::with_capacity(clean.len());
    let mut dropped_unlabeled = 0;
    for rec in clean {
        match labels.get(&rec.id) {
            Some(l) if l.any() => labelled.push(rec.with_labels(l.clone())),
            _ => dropped_unlabeled += 1,
        }
    }
    if dropped_unlabeled > 0 {
        log::warn!("{dropped_unlabeled} record(s) without annotations were dropped");
    }
    let ds = Dataset::from_records(labelled, vocab, max_len, val_fraction, seed)?;
    let report = IngestReport {
        parsed: n_parsed,
        dropped_nonstandard,
        dropped_unlabeled,
        train: ds.train.len(),
        val: ds.val.len(),
    };
    Ok((ds, report))
}

impl Dataset {
    /// Validates records against `max_len` and the alphabet, then splits them.
    pub fn from_records(
        records: Vec<SequenceRecord>,
        vocab: LabelVocabulary,
        max_len: usize,
        val_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Contract("dataset has no records".into()));
        }
        let alphabet = Alphabet::protein();
        let mut seen = std::collections::HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
            if r.labels.len() != vocab.len() {
                return Err(Error::shape("dataset", format!("`{}` has {} labels, vocabulary has {}", r.id, r.labels.len(), vocab.len())));
            }
            encode_one_hot(&r.id, &r.residues, max_len, &alphabet)?;
        }
        let refs: Vec<&LabelVector> = records.iter().map(|r| &r.labels).collect();
        let split = split_indices(&refs, val_fraction, seed)?;
        let mut slots: Vec<Option<SequenceRecord>> = records.into_iter().map(Some).collect();
        let take = |idx: &[usize], slots: &mut Vec<Option<SequenceRecord>>| {
            idx.iter().map(|&i| slots[i].take().expect("split is a partition")).collect()
        };
        let train = take(&split.train, &mut slots);
        let val = take(&split.val, &mut slots);
        Ok(Dataset { train, val, alphabet, vocab, max_len })
    }

    pub fn label_count(&self) -> usize {
        self.vocab.len()
    }

    /// Training records followed by validation records.
    pub fn all_records(&self) -> impl Iterator<Item = &SequenceRecord> {
        self.train.iter().chain(self.val.iter())
    }

    /// `[B, L*A]` one-hot batch.
    pub fn one_hot_batch<F: Real>(&self, records: &[&SequenceRecord]) -> Result<Tensor<F>> {
        let width = self.max_len * self.alphabet.size();
        let mut data = vec![F::zero(); records.len() * width];
        for (r, chunk) in records.iter().zip(data.chunks_mut(width.max(1))) {
            encode_one_hot(&r.id, &r.residues, self.max_len, &self.alphabet)?.write_one_hot(chunk);
        }
        Tensor::new(vec![records.len(), width], data)
    }

    /// `[B, d]` multi-hot batch.
    pub fn label_batch<F: Real>(&self, records: &[&SequenceRecord]) -> Tensor<F> {
        label_matrix(records.iter().map(|r| &r.labels), self.vocab.len())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let all: Vec<&SequenceRecord> = self.all_records().collect();
        fsio::write_atomic(&dir.join("train.fasta"), write_fasta(&self.train).as_bytes())?;
        fsio::write_atomic(&dir.join("val.fasta"), write_fasta(&self.val).as_bytes())?;
        fsio::write_atomic(&dir.join("vocab.txt"), self.vocab.to_text().as_bytes())?;
        let labels = write_labels(all.iter().map(|r| (r.id.as_str(), &r.labels)), &self.vocab);
        fsio::write_atomic(&dir.join("labels.tsv"), labels.as_bytes())?;
        let meta = format!("max_len={}\ntrain={}\nval={}\n", self.max_len, self.train.len(), self.val.len());
        fsio::write_atomic(&dir.join("dataset.txt"), meta.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = fsio::read_string(&dir.join("dataset.txt"))?;
        let meta: BTreeMap<&str, &str> = meta.lines().filter_map(|l| l.split_once('=')).collect();
        let max_len: usize = meta
            .get("max_len")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| Error::Config(format!("{}: missing max_len", dir.display())))?;
        let vocab = LabelVocabulary::parse(&fsio::read_string(&dir.join("vocab.txt"))?)?;
        let labels = parse_labels(&fsio::read_string(&dir.join("labels.tsv"))?, &vocab)?;
        let attach = |file: &str| -> Result<Vec<SequenceRecord>> {
            parse_fasta(&fsio::read_string(&dir.join(file))?)?
                .into_iter()
                .map(|r| {
                    let l = labels.get(&r.id).cloned().ok_or_else(|| Error::MissingId(r.id.clone()))?;
                    Ok(r.with_labels(l))
                })
                .collect()
        };
        Ok(Dataset {
            train: attach("train.fasta")?,
            val: attach("val.fasta")?,
            alphabet: Alphabet::protein(),
            vocab,
            max_len,
        })
    }
}

/// Stacks label vectors into a `[B, d]` tensor.
pub(crate) fn label_matrix<'a, F: Real>(labels: impl Iterator<Item = &'a LabelVector>, d: usize) -> Tensor<F> {
    let mut data = Vec::new();
    let mut rows = 0;
    for l in labels {
        data.extend(l.to_reals::<F>());
        rows += 1;
    }
    Tensor::from_parts(vec![rows, d], data)
}
