//! Parameter storage and the few layers shared by every model.

use std::ops::Index;

use super::graph::{Graph, Var};
use super::rng::{uniform, SeededRng};
use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

/// Ordered, named trainable tensors of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<F> {
    names: Vec<String>,
    values: Vec<Tensor<F>>,
}

impl<F: Real> Default for ParamSet<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> ParamSet<F> {
    pub fn new() -> Self {
        ParamSet { names: Vec::new(), values: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<F>) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.values[id.0]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Tensor<F>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Tensor<F>] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn numel(&self) -> usize {
        self.values.iter().map(Tensor::numel).sum()
    }

    pub fn bind<'g>(&self, g: &'g Graph<F>) -> Bound<'g, F> {
        Bound { vars: self.values.iter().map(|v| g.var(v.clone())).collect() }
    }

    /// `(prefix/name, tensor)` pairs in registration order.
    pub fn named(&self, prefix: &str) -> Vec<(String, Tensor<F>)> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| (format!("{prefix}/{n}"), v.clone()))
            .collect()
    }

    /// Replaces every value from `lookup(prefix/name)`, enforcing shapes.
    pub fn load_named<'a>(
        &mut self,
        prefix: &str,
        lookup: impl Fn(&str) -> Option<&'a Tensor<F>>,
    ) -> Result<()> {
        for (name, slot) in self.names.iter().zip(self.values.iter_mut()) {
            let key = format!("{prefix}/{name}");
            let t = lookup(&key).ok_or_else(|| Error::Checkpoint(format!("missing tensor `{key}`")))?;
            if t.shape() != slot.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{key}` has shape {:?}, model expects {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            *slot = t.clone();
        }
        Ok(())
    }

    pub fn cast<G: Real>(&self) -> ParamSet<G> {
        ParamSet {
            names: self.names.clone(),
            values: self.values.iter().map(Tensor::cast).collect(),
        }
    }
}

/// Parameters of a [`ParamSet`] recorded as leaves of one graph.
pub struct Bound<'g, F: Real> {
    vars: Vec<Var<'g, F>>,
}

impl<'g, F: Real> Bound<'g, F> {
    pub fn vars(&self) -> &[Var<'g, F>] {
        &self.vars
    }

    /// Gradient of a scalar `loss` with respect to every bound parameter.
    pub fn grads(&self, loss: Var<'g, F>) -> Result<Vec<Tensor<F>>> {
        Ok(loss.graph().grad(loss, &self.vars)?.iter().map(Var::value).collect())
    }
}

impl<'g, F: Real> Index<ParamId> for Bound<'g, F> {
    type Output = Var<'g, F>;
    fn index(&self, id: ParamId) -> &Var<'g, F> {
        &self.vars[id.0]
    }
}

/// Fully connected layer `x W + b`, uniform fan-in initialisation.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub fan_in: usize,
    pub fan_out: usize,
}

impl Linear {
    pub fn new<F: Real>(ps: &mut ParamSet<F>, name: &str, fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Self {
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let w = ps.add(format!("{name}.w"), uniform(&[fan_in, fan_out], -bound, bound, rng));
        let b = ps.add(format!("{name}.b"), Tensor::zeros(&[fan_out]));
        Linear { w, b, fan_in, fan_out }
    }

    pub fn forward<'g, F: Real>(&self, p: &Bound<'g, F>, x: Var<'g, F>) -> Var<'g, F> {
        x.matmul(p[self.w]).add_tiled(p[self.b])
    }
}

/// Layer normalisation over the last axis.
#[derive(Debug, Clone, Copy)]
pub struct LayerNorm {
    pub gain: ParamId,
    pub bias: ParamId,
    pub width: usize,
}

impl LayerNorm {
    pub fn new<F: Real>(ps: &mut ParamSet<F>, name: &str, width: usize) -> Self {
        let gain = ps.add(format!("{name}.gain"), Tensor::ones(&[width]));
        let bias = ps.add(format!("{name}.bias"), Tensor::zeros(&[width]));
        LayerNorm { gain, bias, width }
    }

    pub fn forward<'g, F: Real>(&self, p: &Bound<'g, F>, x: Var<'g, F>) -> Var<'g, F> {
        let n = self.width;
        let centered = x - x.mean_last().expand_last(n);
        let var = centered.square().mean_last();
        let inv = var.add_scalar(1e-5).sqrt().expand_last(n);
        (centered / inv).mul_tiled(p[self.gain]).add_tiled(p[self.bias])
    }
}

/// Pre-norm single-head self-attention block with a ReLU feed-forward layer.
#[derive(Debug, Clone, Copy)]
pub struct AttentionBlock {
    ln1: LayerNorm,
    q: Linear,
    k: Linear,
    v: Linear,
    o: Linear,
    ln2: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    width: usize,
}

impl AttentionBlock {
    pub fn new<F: Real>(ps: &mut ParamSet<F>, name: &str, width: usize, rng: &mut SeededRng) -> Self {
        AttentionBlock {
            ln1: LayerNorm::new(ps, &format!("{name}.ln1"), width),
            q: Linear::new(ps, &format!("{name}.q"), width, width, rng),
            k: Linear::new(ps, &format!("{name}.k"), width, width, rng),
            v: Linear::new(ps, &format!("{name}.v"), width, width, rng),
            o: Linear::new(ps, &format!("{name}.o"), width, width, rng),
            ln2: LayerNorm::new(ps, &format!("{name}.ln2"), width),
            ff1: Linear::new(ps, &format!("{name}.ff1"), width, 2 * width, rng),
            ff2: Linear::new(ps, &format!("{name}.ff2"), 2 * width, width, rng),
            width,
        }
    }

    /// `h` is `[batch*seq, width]`; `mask` is an additive `[batch, seq, seq]` score bias.
    pub fn forward<'g, F: Real>(
        &self,
        p: &Bound<'g, F>,
        h: Var<'g, F>,
        batch: usize,
        seq: usize,
        mask: Option<Var<'g, F>>,
    ) -> Var<'g, F> {
        let w = self.width;
        let x = self.ln1.forward(p, h);
        let q = self.q.forward(p, x).reshape(&[batch, seq, w]);
        let k = self.k.forward(p, x).reshape(&[batch, seq, w]);
        let v = self.v.forward(p, x).reshape(&[batch, seq, w]);
        let mut scores = q.matmul_t(k, false, true).scale(1.0 / (w as f64).sqrt());
        if let Some(m) = mask {
            scores = scores + m;
        }
        let attended = scores.softmax().matmul(v).reshape(&[batch * seq, w]);
        let h = h + self.o.forward(p, attended);
        let ff = self.ff2.forward(p, self.ff1.forward(p, self.ln2.forward(p, h)).relu());
        h + ff
    }
}
