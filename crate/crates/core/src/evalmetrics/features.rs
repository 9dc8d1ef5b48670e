use crate::error::{Error, Result};
use crate::seqdata::CANONICAL;

/// Sparse non-negative feature vector with sorted, unique indices.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        FeatureVector { dim, entries: Vec::new() }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();
        FeatureVector { dim: values.len(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Non-zero `(index, value)` pairs in index order.
    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    /// `||self - other||^2`, exactly zero for identical vectors.
    pub fn sq_dist(&self, other: &Self) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                    i += 1;
                    j += 1;
                    va - vb
                }
                (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                    i += 1;
                    va
                }
                (Some(&(_, va)), None) => {
                    i += 1;
                    va
                }
                (_, Some(&(_, vb))) => {
                    j += 1;
                    vb
                }
                (None, None) => unreachable!(),
            };
            s += d * d;
        }
        s
    }
}

/// Index of a canonical residue, or `None`.
fn canonical_index(c: u8) -> Option<usize> {
    CANONICAL.bytes().position(|b| b == c)
}

/// L2-normalised counts of every length-`k` window over the 20 canonical letters
/// (dimension `20^k`, index = base-20 number of the window, first letter most significant).
/// Windows touching any other character are skipped.
pub fn kmer_features(residues: &str, k: usize) -> Result<FeatureVector> {
    if k == 0 {
        return Err(Error::Config("k-mer size must be at least 1".into()));
    }
    let dim = 20usize
        .checked_pow(k as u32)
        .filter(|&d| d <= u32::MAX as usize)
        .ok_or_else(|| Error::Config(format!("k-mer size {k} too large")))?;
    let bytes = residues.as_bytes();
    if bytes.len() < k {
        log::warn!("sequence of length {} is shorter than k = {k}; using the zero vector", bytes.len());
        return Ok(FeatureVector::zeros(dim));
    }
    let mut idx: Vec<u32> = Vec::with_capacity(bytes.len() + 1 - k);
    'win: for w in bytes.windows(k) {
        let mut code = 0usize;
        for &c in w {
            match canonical_index(c) {
                Some(i) => code = code * 20 + i,
                None => continue 'win,
            }
        }
        idx.push(code as u32);
    }
    idx.sort_unstable();
    let mut entries: Vec<(u32, f64)> = Vec::new();
    for i in idx {
        match entries.last_mut() {
            Some((j, c)) if *j == i => *c += 1.0,
            _ => entries.push((i, 1.0)),
        }
    }
    let norm = entries.iter().map(|(_, c)| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, c) in entries.iter_mut() {
            *c /= norm;
        }
    }
    Ok(FeatureVector { dim, entries })
}
