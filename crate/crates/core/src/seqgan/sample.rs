use super::train::SeqGan;
use crate::error::{Error, Result};
use super::models::gumbel_noise;
use crate::numerics::{derive_seed, gaussian, seeded, Tensor};
use crate::seqdata::{decode_rows, Alphabet, LabelVector, SequenceRecord};

impl SeqGan {
    /// One sequence per `(r, seed)`: argmax-decoded generator output for label `y`.
    /// With a Gumbel temperature the logits are perturbed first, so decoding draws from the softmax.
    pub fn generate(&self, reps: &[Vec<f32>], y: &LabelVector, seeds: &[u64]) -> Result<Vec<String>> {
        if reps.len() != seeds.len() {
            return Err(Error::shape("sample_sequences", format!("{} representations, {} seeds", reps.len(), seeds.len())));
        }
        if y.len() != self.vocab.len() {
            return Err(Error::shape("sample_sequences", format!("label width {} vs vocabulary {}", y.len(), self.vocab.len())));
        }
        let n = reps.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let s = self.shape();
        let yv = y.to_reals::<f32>();
        let mut u = Vec::with_capacity(n * s.cond);
        let mut z = Vec::with_capacity(n * s.noise);
        let mut gumbel = Vec::new();
        for (r, &seed) in reps.iter().zip(seeds) {
            u.extend(self.condition(r, &yv)?);
            let mut rng = seeded(seed);
            z.extend(gaussian::<f32>(&[s.noise], &mut rng).into_vec());
            if self.tau.is_some() {
                gumbel.extend(gumbel_noise::<f32>(&[s.seq_width()], &mut rng).into_vec());
            }
        }
        let gumbel = match self.tau {
            Some(tau) => Some((Tensor::new(vec![n, s.seq_width()], gumbel)?, tau)),
            None => None,
        };
        let x = self.nets.generator.generate(
            &Tensor::new(vec![n, s.noise], z)?,
            &Tensor::new(vec![n, s.cond], u)?,
            gumbel.as_ref().map(|(g, t)| (g, *t)),
        )?;
        let alphabet = Alphabet::protein();
        (0..n).map(|i| decode_nonempty(x.row(i), &alphabet)).collect()
    }
}

/// Argmax decoding; a row that decodes to nothing yields its most likely canonical residue,
/// so every generated record stays a valid sequence.
fn decode_nonempty(row: &[f32], alphabet: &Alphabet) -> Result<String> {
    let s = decode_rows(row, alphabet)?;
    if !s.is_empty() {
        return Ok(s);
    }
    let a = alphabet.size();
    let first = &row[..a];
    let best = (0..a - 1).fold(0, |b, i| if first[i] > first[b] { i } else { b });
    Ok(alphabet.symbol(best).to_string())
}

/// `n` records for label `y`; sample `i` uses `reps[i]` and noise seed `derive_seed(seed, i)`.
pub fn sample_sequences(gan: &SeqGan, reps: &[Vec<f32>], y: &LabelVector, n: usize, seed: u64) -> Result<Vec<SequenceRecord>> {
    if reps.len() != n {
        return Err(Error::shape("sample_sequences", format!("{} representations for {n} samples", reps.len())));
    }
    let seeds: Vec<u64> = (0..n as u64).map(|i| derive_seed(seed, i)).collect();
    let desc = gan.vocab.describe(y);
    Ok(gan
        .generate(reps, y, &seeds)?
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut r = SequenceRecord::new(format!("gen_{i}"), s).with_labels(y.clone());
            r.description = desc.clone();
            r
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::{write_fasta, LabelVocabulary};
    use crate::seqgan::{GanNets, GanShape};

    fn gan() -> SeqGan {
        let shape = GanShape { max_len: 10, alphabet: 21, cond: 5, noise: 4, hidden: 8, channels: 3, kernel: 3, labels: 2 };
        SeqGan {
            nets: GanNets::new(shape, 3).unwrap(),
            vocab: LabelVocabulary::new(vec!["GO:1".into(), "GO:2".into()]).unwrap(),
            shift: vec![0.0; 3],
            scale: vec![1.0; 3],
            tau: None,
        }
    }

    #[test]
    fn records_carry_labels_and_are_deterministic() {
        let g = gan();
        let y = LabelVector::from_bits(vec![false, true]);
        let reps = vec![vec![0.1, 0.2, 0.3]; 3];
        let a = sample_sequences(&g, &reps, &y, 3, 5).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|r| r.labels == y && r.description == "GO:2" && !r.residues.is_empty()));
        let b = sample_sequences(&g, &reps, &y, 3, 5).unwrap();
        assert_eq!(write_fasta(&a), write_fasta(&b));
        assert!(a.iter().all(|r| !r.residues.contains('_')));
    }

    #[test]
    fn gumbel_decoding_varies_with_seed_only() {
        let mut g = gan();
        g.tau = Some(0.5);
        let y = LabelVector::from_bits(vec![true, false]);
        let reps = vec![vec![0.0; 3]; 8];
        let a = sample_sequences(&g, &reps, &y, 8, 1).unwrap();
        assert_eq!(a, sample_sequences(&g, &reps, &y, 8, 1).unwrap());
        let distinct: std::collections::BTreeSet<&str> = a.iter().map(|r| r.residues.as_str()).collect();
        assert!(distinct.len() > 1);
    }

    #[test]
    fn zero_samples_is_empty_and_bad_width_errors() {
        let g = gan();
        let y = LabelVector::from_bits(vec![true, false]);
        assert!(sample_sequences(&g, &[], &y, 0, 1).unwrap().is_empty());
        assert!(matches!(sample_sequences(&g, &[vec![0.0; 4]], &y, 1, 1), Err(Error::Width(_))));
    }

    #[test]
    fn empty_decode_falls_back_to_one_residue() {
        let a = Alphabet::protein();
        let mut row = vec![0.0f32; 2 * 21];
        row[20] = 0.9;
        row[3] = 0.1;
        row[21 + 20] = 1.0;
        assert_eq!(decode_nonempty(&row, &a).unwrap(), a.symbol(3).to_string());
    }
}
