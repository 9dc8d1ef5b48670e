use rand::seq::SliceRandom;

use super::{ce_loss, micro_accuracy, Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, seeded, AdamConfig, AdamState, Graph, Tensor};
use crate::seqdata::{Dataset, SequenceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderTrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub seed: u64,
}

/// Per-epoch training summary. Validation fields are `None` without a validation split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedEncoder {
    pub model: Encoder<f32>,
    pub log: Vec<EpochLog>,
}

impl TrainedEncoder {
    pub fn final_val_accuracy(&self) -> Option<f64> {
        self.log.last().and_then(|e| e.val_accuracy)
    }
}

/// Minimises the multi-label cross-entropy with Adam.
pub fn train_encoder(ds: &Dataset, arch: EncoderConfig, cfg: &EncoderTrainConfig) -> Result<TrainedEncoder> {
    if ds.train.is_empty() {
        return Err(Error::Contract("train_encoder needs at least one training record".into()));
    }
    if cfg.batch == 0 {
        return Err(Error::Config("batch must be positive".into()));
    }
    if arch.max_len != ds.max_len || arch.labels != ds.label_count() {
        return Err(Error::Config(format!(
            "encoder expects L={} d={}, dataset has L={} d={}",
            arch.max_len,
            arch.labels,
            ds.max_len,
            ds.label_count()
        )));
    }
    let mut model = Encoder::<f32>::new(arch, derive_seed(cfg.seed, 0))?;
    let mut adam = AdamState::new(AdamConfig::STANDARD, model.params().values());
    let frozen = if arch.freeze_backbone { model.backbone_len() } else { 0 };
    let mut order: Vec<usize> = (0..ds.train.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut seeded(derive_seed(cfg.seed, 1 + epoch as u64)));
        let mut total = 0.0;
        for (step, chunk) in order.chunks(cfg.batch).enumerate() {
            let recs: Vec<&SequenceRecord> = chunk.iter().map(|&i| &ds.train[i]).collect();
            let x = ds.one_hot_batch::<f32>(&recs)?;
            let y = ds.label_batch::<f32>(&recs);
            let g = Graph::new();
            let p = model.params().bind(&g);
            let (logits, _) = model.forward(&p, &x)?;
            let loss = ce_loss(logits, &y)?;
            let value = loss.item() as f64;
            if !value.is_finite() {
                return Err(Error::Diverged(format!("encoder loss {value} at epoch {epoch}, step {step}")));
            }
            let mut grads = p.grads(loss)?;
            for gr in grads.iter_mut().take(frozen) {
                *gr = Tensor::zeros(gr.shape());
            }
            adam.step(model.params_mut().values_mut(), &grads, cfg.lr)?;
            total += value * recs.len() as f64;
        }
        let train_loss = total / ds.train.len() as f64;
        let (val_loss, val_accuracy) = match evaluate(&model, ds, &ds.val)? {
            Some((l, a)) => (Some(l), Some(a)),
            None => (None, None),
        };
        log::info!(
            "encoder epoch {epoch}: train_loss={train_loss:.5} val_loss={} val_acc={}",
            fmt_opt(val_loss),
            fmt_opt(val_accuracy)
        );
        log.push(EpochLog { epoch, train_loss, val_loss, val_accuracy });
    }
    Ok(TrainedEncoder { model, log })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

/// Mean loss and micro-accuracy over `records`, or `None` if empty.
pub(crate) fn evaluate(model: &Encoder<f32>, ds: &Dataset, records: &[SequenceRecord]) -> Result<Option<(f64, f64)>> {
    if records.is_empty() {
        return Ok(None);
    }
    let (mut loss, mut hits) = (0.0, 0.0);
    for chunk in records.chunks(128) {
        let recs: Vec<&SequenceRecord> = chunk.iter().collect();
        let x = ds.one_hot_batch::<f32>(&recs)?;
        let y = ds.label_batch::<f32>(&recs);
        let g = Graph::new();
        let p = model.params().bind(&g);
        let (logits, _) = model.forward(&p, &x)?;
        loss += ce_loss(logits, &y)?.item() as f64 * chunk.len() as f64;
        hits += micro_accuracy(&logits.value(), &y) * chunk.len() as f64;
    }
    let n = records.len() as f64;
    Ok(Some((loss / n, hits / n)))
}
