use super::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor};

/// A sequence as `L` symbol indices, PAD-filled after the original length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    indices: Vec<u8>,
    length: usize,
    alphabet_size: usize,
}

impl EncodedSequence {
    /// Padded length `L`.
    pub fn max_len(&self) -> usize {
        self.indices.len()
    }

    /// Original residue count.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    /// Writes the `L×A` one-hot rows into `out` (length `L*A`).
    pub fn write_one_hot<F: Real>(&self, out: &mut [F]) {
        let a = self.alphabet_size;
        debug_assert_eq!(out.len(), self.indices.len() * a);
        out.iter_mut().for_each(|v| *v = F::zero());
        for (row, &idx) in self.indices.iter().enumerate() {
            out[row * a + idx as usize] = F::one();
        }
    }

    /// `L×A` one-hot matrix.
    pub fn to_matrix<F: Real>(&self) -> Tensor<F> {
        let mut data = vec![F::zero(); self.indices.len() * self.alphabet_size];
        self.write_one_hot(&mut data);
        Tensor::from_parts(vec![self.indices.len(), self.alphabet_size], data)
    }
}

/// One-hot encodes `residues` into `max_len` rows. Longer input is an error.
pub fn encode_one_hot(id: &str, residues: &str, max_len: usize, alphabet: &Alphabet) -> Result<EncodedSequence> {
    let len = residues.chars().count();
    if len > max_len {
        return Err(Error::TooLong { id: id.to_string(), len, max: max_len });
    }
    let mut indices = Vec::with_capacity(max_len);
    for c in residues.chars() {
        let i = alphabet
            .residue_index(c)
            .ok_or_else(|| Error::Contract(format!("`{id}`: {c:?} is not a canonical residue")))?;
        indices.push(i as u8);
    }
    indices.resize(max_len, alphabet.pad_index() as u8);
    Ok(EncodedSequence { indices, length: len, alphabet_size: alphabet.size() })
}

/// Row-wise argmax read-out of an `L×A` matrix, stopping at the first PAD.
/// Ties go to the lowest index.
pub fn decode<F: Real>(x: &Tensor<F>, alphabet: &Alphabet) -> Result<String> {
    if x.rank() != 2 || x.shape()[1] != alphabet.size() {
        return Err(Error::shape("decode", format!("expected [L, {}], got {:?}", alphabet.size(), x.shape())));
    }
    decode_rows(x.data(), alphabet)
}

/// [`decode`] over a flat row-major `L*A` slice.
pub fn decode_rows<F: Real>(data: &[F], alphabet: &Alphabet) -> Result<String> {
    let a = alphabet.size();
    if data.len() % a != 0 {
        return Err(Error::shape("decode", format!("{} values is not a multiple of {a}", data.len())));
    }
    let mut out = String::new();
    for row in data.chunks(a) {
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        if best == alphabet.pad_index() {
            break;
        }
        out.push(alphabet.symbol(best));
    }
    Ok(out)
}
