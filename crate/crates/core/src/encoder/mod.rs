//! Annotation classifier whose residual-block activations serve as sequence representations.

mod embed;
mod train;

pub use embed::{embed_dataset, load_external_embeddings, Embeddings};
pub use train::{train_encoder, EncoderTrainConfig, EpochLog, TrainedEncoder};

use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::numerics::{seeded, AttentionBlock, Bound, Graph, LayerNorm, Linear, ParamId, ParamSet, Real, Tensor, Var};
use crate::seqdata::Alphabet;

/// Architecture of the stand-in backbone and its heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub max_len: usize,
    pub labels: usize,
    pub width: usize,
    pub blocks: usize,
    /// Representation width `m`.
    pub rep_dim: usize,
    /// Train only the residual block and head.
    pub freeze_backbone: bool,
}

impl EncoderConfig {
    pub fn new(max_len: usize, labels: usize, rep_dim: usize) -> Self {
        EncoderConfig { max_len, labels, width: 64, blocks: 2, rep_dim, freeze_backbone: false }
    }
}

#[derive(Debug, Clone)]
pub struct Encoder<F: Real = f32> {
    config: EncoderConfig,
    params: ParamSet<F>,
    embed: ParamId,
    pos: ParamId,
    blocks: Vec<AttentionBlock>,
    ln_f: LayerNorm,
    proj: Linear,
    res1: Linear,
    res2: Linear,
    head: Linear,
    /// Parameters `0..backbone_len` belong to the backbone.
    backbone_len: usize,
}

const ALPHABET: usize = 21;

impl<F: Real> Encoder<F> {
    pub fn new(config: EncoderConfig, seed: u64) -> Result<Self> {
        let EncoderConfig { max_len, labels, width, blocks, rep_dim, .. } = config;
        if max_len == 0 || labels == 0 || width == 0 || rep_dim == 0 {
            return Err(Error::Config(format!("encoder extents must be positive: {config:?}")));
        }
        let mut rng = seeded(seed);
        let mut ps = ParamSet::new();
        let scale = 1.0 / (width as f64).sqrt();
        let embed = ps.add("embed", crate::numerics::rng::uniform(&[ALPHABET, width], -1.0, 1.0, &mut rng));
        let pos = ps.add("pos", crate::numerics::rng::uniform(&[max_len, width], -scale, scale, &mut rng));
        let blocks = (0..blocks)
            .map(|i| AttentionBlock::new(&mut ps, &format!("block{i}"), width, &mut rng))
            .collect();
        let ln_f = LayerNorm::new(&mut ps, "ln_f", width);
        let proj = Linear::new(&mut ps, "proj", width, rep_dim, &mut rng);
        let backbone_len = ps.len();
        let res1 = Linear::new(&mut ps, "res1", rep_dim, rep_dim, &mut rng);
        let res2 = Linear::new(&mut ps, "res2", rep_dim, rep_dim, &mut rng);
        let head = Linear::new(&mut ps, "head", rep_dim, labels, &mut rng);
        Ok(Encoder { config, params: ps, embed, pos, blocks, ln_f, proj, res1, res2, head, backbone_len })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }

    /// Ids of the classification head weights.
    pub fn head_params(&self) -> [ParamId; 2] {
        [self.head.w, self.head.b]
    }

    pub(crate) fn backbone_len(&self) -> usize {
        self.backbone_len
    }

    pub fn cast<G: Real>(&self) -> Encoder<G> {
        Encoder {
            config: self.config,
            params: self.params.cast(),
            embed: self.embed,
            pos: self.pos,
            blocks: self.blocks.clone(),
            ln_f: self.ln_f,
            proj: self.proj,
            res1: self.res1,
            res2: self.res2,
            head: self.head,
            backbone_len: self.backbone_len,
        }
    }

    /// Records the forward pass; `x` is a `[B, L*A]` (or `[B, L, A]`) one-hot batch.
    /// Returns `(logits [B, d], rep [B, m])`.
    pub fn forward<'g>(&self, p: &Bound<'g, F>, x: &Tensor<F>) -> Result<(Var<'g, F>, Var<'g, F>)> {
        let (l, w) = (self.config.max_len, self.config.width);
        let b = x.shape().first().copied().unwrap_or(0);
        if x.numel() != b * l * ALPHABET || b == 0 {
            return Err(Error::shape(
                "encoder_forward",
                format!("expected [B, {l}*{ALPHABET}] with B > 0, got {:?}", x.shape()),
            ));
        }
        let g = p[self.embed].graph();
        let (mask, pool) = pad_mask_and_pool::<F>(x, b, l);
        let xv = g.var(x.reshape(&[b * l, ALPHABET])?);
        let mut h = xv
            .matmul(p[self.embed])
            .reshape(&[b, l, w])
            .add_tiled(p[self.pos])
            .reshape(&[b * l, w]);
        let mask = g.var(mask);
        for block in &self.blocks {
            h = block.forward(p, h, b, l, Some(mask));
        }
        let h = self.ln_f.forward(p, h).reshape(&[b, l, w]);
        let pooled = g.var(pool).matmul(h).reshape(&[b, w]);
        let h0 = self.proj.forward(p, pooled);
        let rep = h0 + self.res2.forward(p, self.res1.forward(p, h0).relu());
        let logits = self.head.forward(p, rep);
        Ok((logits, rep))
    }

    /// Inference: `(logits, rep)` as plain tensors.
    pub fn encode(&self, x: &Tensor<F>) -> Result<(Tensor<F>, Tensor<F>)> {
        let g = Graph::new();
        let p = self.params.bind(&g);
        let (logits, rep) = self.forward(&p, x)?;
        Ok((logits.value(), rep.value()))
    }
}

impl Encoder<f32> {
    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ck = Checkpoint::new();
        ck.extend(self.params.named("encoder"))?;
        let c = &self.config;
        ck.set_meta("kind", "encoder");
        ck.set_meta("max_len", c.max_len);
        ck.set_meta("labels", c.labels);
        ck.set_meta("width", c.width);
        ck.set_meta("blocks", c.blocks);
        ck.set_meta("rep_dim", c.rep_dim);
        ck.set_meta("freeze_backbone", c.freeze_backbone);
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        expect_kind(ck, "encoder")?;
        let config = EncoderConfig {
            max_len: ck.meta_parse("max_len")?,
            labels: ck.meta_parse("labels")?,
            width: ck.meta_parse("width")?,
            blocks: ck.meta_parse("blocks")?,
            rep_dim: ck.meta_parse("rep_dim")?,
            freeze_backbone: ck.meta_parse("freeze_backbone")?,
        };
        let mut model = Encoder::new(config, 0)?;
        model.params.load_named("encoder", |k| ck.get(k))?;
        Ok(model)
    }
}

pub(crate) fn expect_kind(ck: &Checkpoint, kind: &str) -> Result<()> {
    match ck.meta("kind") {
        Some(k) if k == kind => Ok(()),
        other => Err(Error::Checkpoint(format!("expected a {kind} checkpoint, found kind {other:?}"))),
    }
}

/// Additive key mask `[B, L, L]` hiding PAD keys, and mean-pool weights `[B, 1, L]` over non-PAD rows.
fn pad_mask_and_pool<F: Real>(x: &Tensor<F>, b: usize, l: usize) -> (Tensor<F>, Tensor<F>) {
    let pad = Alphabet::protein().pad_index();
    let half = F::lit(0.5);
    let mut is_pad = vec![false; b * l];
    for (i, flag) in is_pad.iter_mut().enumerate() {
        *flag = x.data()[i * ALPHABET + pad] > half;
    }
    let neg = F::lit(-1e9);
    let mut mask = vec![F::zero(); b * l * l];
    let mut pool = vec![F::zero(); b * l];
    for bi in 0..b {
        let keys = &is_pad[bi * l..(bi + 1) * l];
        let live = keys.iter().filter(|p| !**p).count();
        // an all-PAD row keeps every key visible so the softmax stays defined
        let hide = live > 0;
        for i in 0..l {
            for (j, &kp) in keys.iter().enumerate() {
                if hide && kp {
                    mask[(bi * l + i) * l + j] = neg;
                }
            }
        }
        let wgt = F::one() / F::lit(live.max(1) as f64);
        for (j, &kp) in keys.iter().enumerate() {
            if !kp {
                pool[bi * l + j] = wgt;
            }
        }
    }
    (Tensor::from_parts(vec![b, l, l], mask), Tensor::from_parts(vec![b, 1, l], pool))
}

/// Mean over labels of binary cross-entropy on `sigmoid(logits)`: `softplus(z) - y z`.
pub fn ce_loss<'g, F: Real>(logits: Var<'g, F>, y: &Tensor<F>) -> Result<Var<'g, F>> {
    if logits.shape() != y.shape() {
        return Err(Error::shape("ce_loss", format!("logits {:?} vs labels {:?}", logits.shape(), y.shape())));
    }
    let yv = logits.graph().var(y.clone());
    Ok((logits.softplus() - yv * logits).mean())
}

/// Fraction of label entries where `logit > 0` agrees with the target.
pub fn micro_accuracy<F: Real>(logits: &Tensor<F>, y: &Tensor<F>) -> f64 {
    let n = logits.numel().max(1);
    let hits = logits
        .data()
        .iter()
        .zip(y.data())
        .filter(|(&z, &t)| (z > F::zero()) == (t > F::lit(0.5)))
        .count();
    hits as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqdata::{encode_one_hot, Alphabet};

    fn batch(seqs: &[&str], l: usize) -> Tensor<f64> {
        let a = Alphabet::protein();
        let mut data = Vec::new();
        for s in seqs {
            let e = encode_one_hot("x", s, l, &a).unwrap();
            let mut row = vec![0.0; l * 21];
            e.write_one_hot(&mut row);
            data.extend(row);
        }
        Tensor::new(vec![seqs.len(), l * 21], data).unwrap()
    }

    fn small() -> Encoder<f64> {
        let mut c = EncoderConfig::new(12, 3, 6);
        c.width = 8;
        Encoder::new(c, 3).unwrap()
    }

    #[test]
    fn forward_shapes_and_determinism() {
        let m = small();
        let x = batch(&["ACDK", "MKVWWA"], 12);
        let (l1, r1) = m.encode(&x).unwrap();
        let (l2, r2) = m.encode(&x).unwrap();
        assert_eq!(l1.shape(), &[2, 3]);
        assert_eq!(r1.shape(), &[2, 6]);
        assert_eq!(l1, l2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn swapping_positions_changes_rep() {
        let m = small();
        let (_, a) = m.encode(&batch(&["ACDKW"], 12)).unwrap();
        let (_, b) = m.encode(&batch(&["CADKW"], 12)).unwrap();
        assert!(a.max_abs_diff(&b) > 1e-9);
    }

    #[test]
    fn pad_positions_do_not_leak_into_rep() {
        let mut m = small();
        let x = batch(&["MKV", "ACDEFG"], 12);
        let (_, a) = m.encode(&x).unwrap();
        let embed = m.embed;
        let pad = Alphabet::protein().pad_index();
        let t = m.params_mut().get_mut(embed);
        for v in &mut t.data_mut()[pad * 8..(pad + 1) * 8] {
            *v += 3.0;
        }
        let (_, b) = m.encode(&x).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn rep_is_invariant_to_head_weights() {
        let mut m = small();
        let x = batch(&["ACDK", "MKVW"], 12);
        let (la, ra) = m.encode(&x).unwrap();
        for id in m.head_params() {
            let t = m.params_mut().get_mut(id);
            for v in t.data_mut() {
                *v += 0.75;
            }
        }
        let (lb, rb) = m.encode(&x).unwrap();
        assert_eq!(ra, rb);
        assert!(la.max_abs_diff(&lb) > 0.1);
    }

    #[test]
    fn ce_loss_limits_and_oracle() {
        let g = Graph::<f64>::new();
        let y = Tensor::new(vec![1, 3], vec![1.0, 0.0, 1.0]).unwrap();
        let perfect = g.var(Tensor::new(vec![1, 3], vec![30.0, -30.0, 30.0]).unwrap());
        assert!(ce_loss(perfect, &y).unwrap().item() < 1e-9);
        let zero = g.var(Tensor::zeros(&[1, 3]));
        assert!((ce_loss(zero, &y).unwrap().item() - std::f64::consts::LN_2).abs() < 1e-15);

        let z = vec![0.3, -1.7, 2.2, 0.05, -0.4, 5.0];
        let t = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0];
        let oracle: f64 = z
            .iter()
            .zip(&t)
            .map(|(&z, &t): (&f64, &f64)| {
                let p = 1.0 / (1.0 + (-z).exp());
                -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
            })
            .sum::<f64>()
            / 6.0;
        let zv = g.var(Tensor::new(vec![2, 3], z).unwrap());
        let got = ce_loss(zv, &Tensor::new(vec![2, 3], t).unwrap()).unwrap().item();
        assert!((got - oracle).abs() < 1e-10);
    }

    #[test]
    fn wrong_width_is_shape_error() {
        let m = small();
        assert!(matches!(m.encode(&Tensor::zeros(&[1, 5])), Err(Error::Shape { .. })));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut c = EncoderConfig::new(10, 2, 4);
        c.width = 8;
        let m = Encoder::<f32>::new(c, 1).unwrap();
        let back = Encoder::from_checkpoint(&m.to_checkpoint().unwrap()).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.config(), m.config());
    }
}
