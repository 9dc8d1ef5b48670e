use std::collections::BTreeMap;
use std::path::Path;

use super::Encoder;
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::seqdata::{Dataset, SequenceRecord};

/// Representation table keyed by record id.
///
/// `width` is the stored (possibly zero-padded) width; `raw_width` the encoder's `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    width: usize,
    raw_width: usize,
    vectors: BTreeMap<String, Vec<f32>>,
}

impl Embeddings {
    pub fn new(width: usize, raw_width: usize) -> Result<Self> {
        if raw_width > width || width == 0 {
            return Err(Error::Width(format!("raw width {raw_width} exceeds stored width {width}")));
        }
        Ok(Embeddings { width, raw_width, vectors: BTreeMap::new() })
    }

    pub fn insert(&mut self, id: impl Into<String>, v: Vec<f32>) -> Result<()> {
        let id = id.into();
        if v.len() != self.width {
            return Err(Error::Width(format!("`{id}` has width {}, table has {}", v.len(), self.width)));
        }
        if self.vectors.insert(id.clone(), v).is_some() {
            return Err(Error::DuplicateId(id));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn raw_width(&self) -> usize {
        self.raw_width
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Result<&[f32]> {
        self.vectors.get(id).map(Vec::as_slice).ok_or_else(|| Error::MissingId(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// `[B, width]` rows for `ids` in order.
    pub fn matrix<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> Result<Tensor<f32>> {
        let mut data = Vec::new();
        let mut rows = 0;
        for id in ids {
            data.extend_from_slice(self.get(id)?);
            rows += 1;
        }
        Tensor::new(vec![rows, self.width], data)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ck = Checkpoint::new();
        for (id, v) in &self.vectors {
            ck.insert(id.clone(), Tensor::new(vec![v.len()], v.clone())?)?;
        }
        ck.set_meta("kind", "embeddings");
        ck.set_meta("raw_width", self.raw_width);
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let mut width = None;
        let mut vectors = BTreeMap::new();
        for (id, t) in ck.tensors() {
            let w = t.numel();
            match width {
                None => width = Some(w),
                Some(expected) if expected != w => {
                    return Err(Error::Width(format!(
                        "mixed representation widths: {expected} and {w} (`{id}`)"
                    )))
                }
                _ => {}
            }
            vectors.insert(id.clone(), t.data().to_vec());
        }
        let width = width.unwrap_or(0);
        let raw_width = match ck.meta("raw_width") {
            Some(_) => ck.meta_parse("raw_width")?,
            None => width,
        };
        if raw_width > width && !vectors.is_empty() {
            return Err(Error::Width(format!("raw width {raw_width} exceeds stored width {width}")));
        }
        Ok(Embeddings { width, raw_width, vectors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint()?.save(path)
    }
}

/// Reads a representation table produced by `embed` or computed externally.
pub fn load_external_embeddings(path: &Path) -> Result<Embeddings> {
    Embeddings::from_checkpoint(&Checkpoint::load(path)?)
}

/// Inference-mode representations for every record of `ds`, zero-padded to `pad_to`.
pub fn embed_dataset(model: &Encoder<f32>, ds: &Dataset, pad_to: usize) -> Result<Embeddings> {
    let recs: Vec<&SequenceRecord> = ds.all_records().collect();
    embed_records(model, ds, &recs, pad_to)
}

pub(crate) fn embed_records(
    model: &Encoder<f32>,
    ds: &Dataset,
    recs: &[&SequenceRecord],
    pad_to: usize,
) -> Result<Embeddings> {
    let m = model.config().rep_dim;
    if pad_to < m {
        return Err(Error::Width(format!("pad_to {pad_to} is smaller than representation width {m}")));
    }
    let mut out = Embeddings::new(pad_to, m)?;
    for chunk in recs.chunks(128) {
        let (_, rep) = model.encode(&ds.one_hot_batch::<f32>(chunk)?)?;
        for (i, r) in chunk.iter().enumerate() {
            let mut v = rep.row(i).to_vec();
            v.resize(pad_to, 0.0);
            out.insert(r.id.clone(), v)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::seqdata::{LabelVector, LabelVocabulary};

    fn setup() -> (Encoder<f32>, Dataset) {
        let vocab = LabelVocabulary::new(vec!["T".into()]).unwrap();
        let recs = (0..6)
            .map(|i| SequenceRecord::new(format!("r{i}"), &"ACDEFGHIKL"[..3 + i]).with_labels(LabelVector::from_bits(vec![true])))
            .collect();
        let ds = Dataset::from_records(recs, vocab, 12, 0.3, 1).unwrap();
        let mut c = EncoderConfig::new(12, 1, 6);
        c.width = 8;
        (Encoder::new(c, 9).unwrap(), ds)
    }

    #[test]
    fn padding_appends_exact_zeros_and_keeps_prefix() {
        let (m, ds) = setup();
        let raw = embed_dataset(&m, &ds, 6).unwrap();
        let padded = embed_dataset(&m, &ds, 10).unwrap();
        assert_eq!(padded.len(), 6);
        for (id, v) in padded.iter() {
            assert_eq!(&v[..6], raw.get(id).unwrap());
            assert!(v[6..].iter().all(|&x| x == 0.0));
        }
        assert!(embed_dataset(&m, &ds, 5).is_err());
    }

    #[test]
    fn every_id_exactly_once() {
        let (m, ds) = setup();
        let e = embed_dataset(&m, &ds, 6).unwrap();
        let mut ids: Vec<&str> = ds.all_records().map(|r| r.id.as_str()).collect();
        ids.sort();
        assert_eq!(e.iter().map(|(k, _)| k).collect::<Vec<_>>(), ids);
    }

    #[test]
    fn save_load_round_trip_and_mixed_widths() {
        let (m, ds) = setup();
        let e = embed_dataset(&m, &ds, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.prgc");
        e.save(&path).unwrap();
        assert_eq!(load_external_embeddings(&path).unwrap(), e);

        let mut ck = Checkpoint::new();
        ck.insert("a", Tensor::zeros(&[480])).unwrap();
        ck.insert("b", Tensor::zeros(&[480])).unwrap();
        let ok = Embeddings::from_checkpoint(&ck).unwrap();
        assert_eq!(ok.width(), 480);
        assert!(matches!(ok.get("c"), Err(Error::MissingId(_))));
        ck.insert("c", Tensor::zeros(&[512])).unwrap();
        assert!(matches!(Embeddings::from_checkpoint(&ck), Err(Error::Width(_))));
    }
}
