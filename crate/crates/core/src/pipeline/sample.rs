use crate::error::{Error, Result};
use crate::latentdiff::LatentDiffusion;
use crate::numerics::derive_seed;
use crate::seqdata::{LabelVector, SequenceRecord};
use crate::seqgan::SeqGan;

/// Step 1: draws a representation for a label.
pub trait RepresentationSampler {
    fn rep_width(&self) -> usize;
    fn sample_rep(&self, y: &LabelVector, guidance: Option<f64>, seed: u64) -> Result<Vec<f32>>;
}

/// Step 2: turns a representation into a sequence.
pub trait SequenceSampler {
    fn rep_width(&self) -> usize;
    fn sample_seq(&self, r: &[f32], y: &LabelVector, seed: u64) -> Result<String>;
    fn describe(&self, y: &LabelVector) -> String;
}

impl RepresentationSampler for LatentDiffusion {
    fn rep_width(&self) -> usize {
        self.width()
    }

    fn sample_rep(&self, y: &LabelVector, guidance: Option<f64>, seed: u64) -> Result<Vec<f32>> {
        Ok(self.sample(std::slice::from_ref(y), &[seed], guidance)?.into_vec())
    }
}

impl SequenceSampler for SeqGan {
    fn rep_width(&self) -> usize {
        SeqGan::rep_width(self)
    }

    fn sample_seq(&self, r: &[f32], y: &LabelVector, seed: u64) -> Result<String> {
        let mut out = self.generate(&[r.to_vec()], y, &[seed])?;
        Ok(out.pop().expect("one sample"))
    }

    fn describe(&self, y: &LabelVector) -> String {
        self.vocab.describe(y)
    }
}

/// Zero-pads a step-1 representation to the width the decoder was trained on.
pub fn pad_representation(mut r: Vec<f32>, width: usize) -> Result<Vec<f32>> {
    if r.len() > width {
        return Err(Error::Width(format!(
            "diffusion produces width {}, GAN expects width {width}",
            r.len()
        )));
    }
    r.resize(width, 0.0);
    Ok(r)
}

/// `n` records for label `y`. Sample `i` first draws `r` with seed
/// `derive_seed(derive_seed(seed, 0), i)`, then decodes it with seed `derive_seed(derive_seed(seed, 1), i)`.
pub fn two_stage_sample<D: RepresentationSampler + ?Sized, G: SequenceSampler + ?Sized>(
    y: &LabelVector,
    n: usize,
    diffusion: &D,
    gan: &G,
    guidance: Option<f64>,
    seed: u64,
) -> Result<Vec<SequenceRecord>> {
    if diffusion.rep_width() > gan.rep_width() {
        return Err(Error::Width(format!(
            "diffusion width {} exceeds GAN representation width {}",
            diffusion.rep_width(),
            gan.rep_width()
        )));
    }
    let (rep_seed, seq_seed) = (derive_seed(seed, 0), derive_seed(seed, 1));
    let desc = gan.describe(y);
    (0..n)
        .map(|i| {
            let r = diffusion.sample_rep(y, guidance, derive_seed(rep_seed, i as u64))?;
            let r = pad_representation(r, gan.rep_width())?;
            let s = gan.sample_seq(&r, y, derive_seed(seq_seed, i as u64))?;
            let mut rec = SequenceRecord::new(format!("gen_{i}"), s).with_labels(y.clone());
            rec.description = desc.clone();
            Ok(rec)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::cell::{Cell, RefCell};

    use super::*;

    struct FixedRep {
        r: Vec<f32>,
        calls: Cell<usize>,
    }

    impl RepresentationSampler for FixedRep {
        fn rep_width(&self) -> usize {
            self.r.len()
        }
        fn sample_rep(&self, _: &LabelVector, _: Option<f64>, _: u64) -> Result<Vec<f32>> {
            self.calls.set(self.calls.get() + 1);
            Ok(self.r.clone())
        }
    }

    struct Echo {
        width: usize,
        seen: RefCell<Vec<Vec<f32>>>,
    }

    impl SequenceSampler for Echo {
        fn rep_width(&self) -> usize {
            self.width
        }
        fn sample_seq(&self, r: &[f32], _: &LabelVector, _: u64) -> Result<String> {
            self.seen.borrow_mut().push(r.to_vec());
            Ok("ACD".into())
        }
        fn describe(&self, _: &LabelVector) -> String {
            "T".into()
        }
    }

    #[test]
    fn one_sample_one_call_each_and_zero_padding() {
        let d = FixedRep { r: vec![1.0, 2.0], calls: Cell::new(0) };
        let g = Echo { width: 4, seen: RefCell::new(Vec::new()) };
        let y = LabelVector::from_bits(vec![true]);
        let out = two_stage_sample(&y, 1, &d, &g, None, 0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(d.calls.get(), 1);
        assert_eq!(g.seen.borrow().as_slice(), &[vec![1.0, 2.0, 0.0, 0.0]]);
        assert_eq!(out[0].id, "gen_0");
        assert_eq!(out[0].description, "T");
    }

    #[test]
    fn wider_diffusion_is_rejected_with_both_widths() {
        let d = FixedRep { r: vec![0.0; 6], calls: Cell::new(0) };
        let g = Echo { width: 4, seen: RefCell::new(Vec::new()) };
        let err = two_stage_sample(&LabelVector::from_bits(vec![true]), 2, &d, &g, None, 0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('6') && msg.contains('4'), "{msg}");
        assert_eq!(d.calls.get(), 0);
    }
}
