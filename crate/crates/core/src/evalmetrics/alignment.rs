use crate::error::{Error, Result};

/// Per-column entropy of an alignment, in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnEntropy {
    pub bits: Vec<f64>,
    /// Columns made only of gaps (entropy reported as 0).
    pub all_gap: Vec<bool>,
}

fn is_gap(c: u8) -> bool {
    c == b'-' || c == b'.'
}

/// Shannon entropy (base 2) of residue frequencies per column, ignoring `-` and `.`.
pub fn column_entropy<S: AsRef<str>>(rows: &[S]) -> Result<ColumnEntropy> {
    if rows.len() < 2 {
        return Err(Error::Contract(format!("alignment needs at least 2 rows, got {}", rows.len())));
    }
    let width = rows[0].as_ref().len();
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.as_ref().len() != width) {
        return Err(Error::shape(
            "column_entropy",
            format!("row {} has length {}, row 0 has {width}", i, r.as_ref().len()),
        ));
    }
    let mut bits = Vec::with_capacity(width);
    let mut all_gap = Vec::with_capacity(width);
    for col in 0..width {
        let mut counts = [0usize; 256];
        let mut n = 0usize;
        for r in rows {
            let c = r.as_ref().as_bytes()[col].to_ascii_uppercase();
            if !is_gap(c) {
                counts[c as usize] += 1;
                n += 1;
            }
        }
        all_gap.push(n == 0);
        let h = if n == 0 {
            0.0
        } else {
            -counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n as f64;
                    p * p.log2()
                })
                .sum::<f64>()
        };
        bits.push(h.max(0.0));
    }
    Ok(ColumnEntropy { bits, all_gap })
}

/// TSV with `column`, `entropy_bits` and `all_gap` columns (1-based columns).
pub fn column_entropy_tsv(e: &ColumnEntropy) -> String {
    let mut out = String::from("column\tentropy_bits\tall_gap\n");
    for (i, (b, g)) in e.bits.iter().zip(&e.all_gap).enumerate() {
        out.push_str(&format!("{}\t{}\t{}\n", i + 1, super::fmt_sig9(*b as f32), u8::from(*g)));
    }
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Step {
    Diag,
    Up,
    Left,
}

/// Percent identity of the Needleman-Wunsch global alignment
/// (match 1, mismatch 0, gap -1), `100 * matches / alignment length`.
///
/// Traceback prefers diagonal, then up (gap in the second sequence), then left.
/// Inputs are put in a canonical order first so the result is symmetric.
pub fn pairwise_identity(s1: &str, s2: &str) -> Result<f64> {
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::Contract("pairwise_identity needs non-empty sequences".into()));
    }
    let (a, b) = if (s1.len(), s1) <= (s2.len(), s2) { (s1, s2) } else { (s2, s1) };
    let (a, b) = (a.as_bytes(), b.as_bytes());
    let (n, m) = (a.len(), b.len());
    let w = m + 1;
    let mut score = vec![0i32; (n + 1) * w];
    for i in 0..=n {
        score[i * w] = -(i as i32);
    }
    for j in 0..=m {
        score[j] = -(j as i32);
    }
    for i in 1..=n {
        for j in 1..=m {
            let diag = score[(i - 1) * w + j - 1] + i32::from(a[i - 1] == b[j - 1]);
            let up = score[(i - 1) * w + j] - 1;
            let left = score[i * w + j - 1] - 1;
            score[i * w + j] = diag.max(up).max(left);
        }
    }
    let (mut i, mut j) = (n, m);
    let (mut matches, mut len) = (0usize, 0usize);
    while i > 0 || j > 0 {
        let s = score[i * w + j];
        let step = if i > 0 && j > 0 && s == score[(i - 1) * w + j - 1] + i32::from(a[i - 1] == b[j - 1]) {
            Step::Diag
        } else if i > 0 && s == score[(i - 1) * w + j] - 1 {
            Step::Up
        } else {
            Step::Left
        };
        match step {
            Step::Diag => {
                matches += usize::from(a[i - 1] == b[j - 1]);
                i -= 1;
                j -= 1;
            }
            Step::Up => i -= 1,
            Step::Left => j -= 1,
        }
        len += 1;
    }
    Ok(100.0 * matches as f64 / len as f64)
}

/// Mean over `gen` of the identity to the closest member of `real`.
pub fn mean_nearest_identity<S: AsRef<str>, T: AsRef<str>>(gen: &[S], real: &[T]) -> Result<f64> {
    if gen.is_empty() || real.is_empty() {
        return Err(Error::Contract("nearest identity needs non-empty sets".into()));
    }
    let mut total = 0.0;
    for g in gen {
        let mut best = 0.0f64;
        for r in real {
            best = best.max(pairwise_identity(g.as_ref(), r.as_ref())?);
        }
        total += best;
    }
    Ok(total / gen.len() as f64)
}
