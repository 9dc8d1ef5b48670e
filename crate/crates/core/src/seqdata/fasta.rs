//! FASTA reading and writing.

use super::labels::LabelVector;
use crate::error::{Error, Result};

/// One labelled sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceRecord {
    pub id: String,
    /// Header text after the identifier.
    pub description: String,
    pub residues: String,
    pub labels: LabelVector,
}

impl SequenceRecord {
    pub fn new(id: impl Into<String>, residues: impl Into<String>) -> Self {
        SequenceRecord {
            id: id.into(),
            description: String::new(),
            residues: residues.into(),
            labels: LabelVector::default(),
        }
    }

    pub fn with_labels(mut self, labels: LabelVector) -> Self {
        self.labels = labels;
        self
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// Parses FASTA text; sequence lines are concatenated and upper-cased.
pub fn parse_fasta(text: &str) -> Result<Vec<SequenceRecord>> {
    parse(text, false)
}

/// Like [`parse_fasta`] but keeps `-` and `.` gap characters (aligned input).
pub fn parse_aligned_fasta(text: &str) -> Result<Vec<SequenceRecord>> {
    parse(text, true)
}

fn parse(text: &str, allow_gaps: bool) -> Result<Vec<SequenceRecord>> {
    let mut records: Vec<SequenceRecord> = Vec::new();
    let mut header_line = 0;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            check_nonempty(records.last(), header_line)?;
            let header = header.trim();
            let (id, desc) = match header.split_once(char::is_whitespace) {
                Some((id, desc)) => (id, desc.trim()),
                None => (header, ""),
            };
            if id.is_empty() {
                return Err(Error::Parse { line: line_no, msg: "header without identifier".into() });
            }
            let mut rec = SequenceRecord::new(id, String::new());
            rec.description = desc.to_string();
            records.push(rec);
            header_line = line_no;
            continue;
        }
        let Some(rec) = records.last_mut() else {
            return Err(Error::Parse { line: line_no, msg: "sequence data before first header".into() });
        };
        for c in line.chars() {
            let ok = c.is_ascii_alphabetic() || (allow_gaps && (c == '-' || c == '.'));
            if !ok {
                return Err(Error::Parse { line: line_no, msg: format!("illegal character {c:?}") });
            }
            rec.residues.push(c.to_ascii_uppercase());
        }
    }
    check_nonempty(records.last(), header_line)?;
    Ok(records)
}

fn check_nonempty(rec: Option<&SequenceRecord>, line: usize) -> Result<()> {
    match rec {
        Some(r) if r.residues.is_empty() => Err(Error::Parse {
            line,
            msg: format!("empty record `{}`", r.id),
        }),
        _ => Ok(()),
    }
}

/// Writes records with 60-column sequence lines.
pub fn write_fasta(records: &[SequenceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push('>');
        out.push_str(&r.id);
        if !r.description.is_empty() {
            out.push(' ');
            out.push_str(&r.description);
        }
        out.push('\n');
        let bytes = r.residues.as_bytes();
        for chunk in bytes.chunks(60) {
            out.push_str(std::str::from_utf8(chunk).expect("ascii residues"));
            out.push('\n');
        }
    }
    out
}
