//! Labelled sequence ingestion: FASTA, annotation TSV, one-hot encoding and splitting.

mod alphabet;
mod dataset;
mod encode;
mod fasta;
mod labels;
mod split;

pub use alphabet::{Alphabet, CANONICAL, NON_STANDARD, PAD_CHAR};
pub use dataset::{ingest, Dataset, IngestReport};
pub use encode::{decode, decode_rows, encode_one_hot, EncodedSequence};
pub use fasta::{parse_aligned_fasta, parse_fasta, write_fasta, SequenceRecord};
pub use labels::{parse_labels, write_labels, LabelVector, LabelVocabulary};
pub use split::{split_indices, Split};

/// Drops records containing any of `U J Z O B X`; returns the survivors and the drop count.
pub fn filter_nonstandard(records: Vec<SequenceRecord>) -> (Vec<SequenceRecord>, usize) {
    let before = records.len();
    let kept: Vec<SequenceRecord> = records
        .into_iter()
        .filter(|r| !r.residues.chars().any(|c| NON_STANDARD.contains(c)))
        .collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(seqs: &[&str]) -> Vec<SequenceRecord> {
        seqs.iter().enumerate().map(|(i, s)| SequenceRecord::new(format!("r{i}"), *s)).collect()
    }

    #[test]
    fn filter_cases() {
        let (kept, dropped) = filter_nonstandard(recs(&["ACD", "AXD"]));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].residues, "ACD");
        assert_eq!(dropped, 1);

        let clean = recs(&["ACD", "MKV"]);
        assert_eq!(filter_nonstandard(clean.clone()), (clean, 0));

        let (kept, dropped) = filter_nonstandard(recs(&["U", "BJ", "ZOX"]));
        assert!(kept.is_empty());
        assert_eq!(dropped, 3);
    }

    #[test]
    fn every_excluded_letter_drops() {
        for c in NON_STANDARD.chars() {
            let (kept, _) = filter_nonstandard(recs(&[&format!("AC{c}D")]));
            assert!(kept.is_empty(), "{c} should be filtered");
        }
    }
}
