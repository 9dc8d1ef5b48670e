//! Parse, filter, label and split a small FASTA file, then one-hot encode a record.
//!
//! `cargo run --example fasta_ingest`

use seqregen::seqdata::{decode, encode_one_hot, ingest, Alphabet};

const FASTA: &str = "\
>p1 kinase
MKTAYIAKQRQISFVKSHFSRQ
>p2 kinase, truncated
MKTAYIAKQR
>p3 has a selenocysteine
MKTUYIAKQR
>p4
GSHMLEDPVDAFQ
>p5
GSHMLEDPAAF
>p6 no labels
ACDEFGHIKLMN
";

const LABELS: &str = "p1\tGO:0016301\np2\tGO:0016301\np3\tGO:0016301\np4\tGO:0005515\np5\tGO:0005515;GO:0016301\n";

const VOCAB: &str = "GO:0005515\nGO:0016301\n";

fn main() {
    let (ds, report) = ingest(FASTA, LABELS, VOCAB, 32, 0.3, 7).expect("ingest");
    println!("{report:?}");
    for r in ds.train.iter().chain(&ds.val) {
        let side = if ds.train.contains(r) { "train" } else { "val" };
        println!("{side:>5}  {:<3} {:<24} {}", r.id, r.residues, ds.vocab.describe(&r.labels));
    }

    let alphabet = Alphabet::protein();
    let rec = &ds.train[0];
    let enc = encode_one_hot(&rec.id, &rec.residues, ds.max_len, &alphabet).unwrap();
    let m = enc.to_matrix::<f32>();
    println!("{} -> one-hot {:?}, length {}", rec.id, m.shape(), enc.length());
    assert_eq!(decode(&m, &alphabet).unwrap(), rec.residues);
}
