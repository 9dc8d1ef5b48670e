use crate::error::{Error, Result};
use crate::numerics::{seeded, AttentionBlock, Bound, Graph, LayerNorm, Linear, ParamId, ParamSet, Real, Tensor, Var};

/// Architecture of the clean-latent predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenoiserConfig {
    /// Representation width.
    pub width: usize,
    pub labels: usize,
    pub hidden: usize,
    pub blocks: usize,
    /// Latent coordinates per token.
    pub chunk: usize,
}

impl DenoiserConfig {
    pub fn new(width: usize, labels: usize) -> Self {
        DenoiserConfig { width, labels, hidden: 64, blocks: 2, chunk: 8 }
    }

    pub fn tokens(&self) -> usize {
        self.width.div_ceil(self.chunk)
    }

    /// Condition token, time token, latent tokens.
    pub fn seq_len(&self) -> usize {
        self.tokens() + 2
    }
}

/// Decoder-only transformer over `[condition, time, latent chunks]`.
#[derive(Debug, Clone)]
pub struct Denoiser<F: Real = f32> {
    config: DenoiserConfig,
    params: ParamSet<F>,
    tok_in: Linear,
    time1: Linear,
    time2: Linear,
    cond: Linear,
    null: ParamId,
    pos: ParamId,
    blocks: Vec<AttentionBlock>,
    ln_f: LayerNorm,
    tok_out: Linear,
}

impl<F: Real> Denoiser<F> {
    pub fn new(config: DenoiserConfig, seed: u64) -> Result<Self> {
        let DenoiserConfig { width, labels, hidden, blocks, chunk } = config;
        if width == 0 || labels == 0 || hidden < 2 || chunk == 0 {
            return Err(Error::Config(format!("bad denoiser extents {config:?}")));
        }
        let mut rng = seeded(seed);
        let mut ps = ParamSet::new();
        let tok_in = Linear::new(&mut ps, "tok_in", chunk, hidden, &mut rng);
        let time1 = Linear::new(&mut ps, "time1", hidden, hidden, &mut rng);
        let time2 = Linear::new(&mut ps, "time2", hidden, hidden, &mut rng);
        let cond = Linear::new(&mut ps, "cond", labels, hidden, &mut rng);
        let null = ps.add("null", crate::numerics::gaussian(&[hidden], &mut rng).map(|v| v * F::lit(0.1)));
        let seq = config.seq_len();
        let pos = ps.add("pos", crate::numerics::gaussian(&[seq, hidden], &mut rng).map(|v| v * F::lit(0.1)));
        let blocks = (0..blocks)
            .map(|i| AttentionBlock::new(&mut ps, &format!("block{i}"), hidden, &mut rng))
            .collect();
        let ln_f = LayerNorm::new(&mut ps, "ln_f", hidden);
        let tok_out = Linear::new(&mut ps, "tok_out", hidden, chunk, &mut rng);
        Ok(Denoiser { config, params: ps, tok_in, time1, time2, cond, null, pos, blocks, ln_f, tok_out })
    }

    pub fn config(&self) -> &DenoiserConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }

    pub fn null_param(&self) -> ParamId {
        self.null
    }

    pub fn cast<G: Real>(&self) -> Denoiser<G> {
        Denoiser {
            config: self.config,
            params: self.params.cast(),
            tok_in: self.tok_in,
            time1: self.time1,
            time2: self.time2,
            cond: self.cond,
            null: self.null,
            pos: self.pos,
            blocks: self.blocks.clone(),
            ln_f: self.ln_f,
            tok_out: self.tok_out,
        }
    }

    /// Predicts the clean latent `[B, width]` from `r_t [B, width]`, integer steps `t`,
    /// labels `y [B, d]` and per-row drop flags (dropped rows use the null embedding).
    pub fn forward<'g>(
        &self,
        p: &Bound<'g, F>,
        r_t: Var<'g, F>,
        t: &[usize],
        y: &Tensor<F>,
        dropped: &[bool],
    ) -> Result<Var<'g, F>> {
        let c = &self.config;
        let (m, h, n, k) = (c.width, c.hidden, c.tokens(), c.chunk);
        let b = t.len();
        if r_t.shape() != [b, m] || y.shape() != [b, c.labels] || dropped.len() != b || b == 0 {
            return Err(Error::shape(
                "denoiser_predict",
                format!(
                    "r_t {:?}, y {:?}, {} steps, {} flags; model width {m}, labels {}",
                    r_t.shape(),
                    y.shape(),
                    b,
                    dropped.len(),
                    c.labels
                ),
            ));
        }
        let g = r_t.graph();
        let toks = self.tok_in.forward(p, r_t.pad(0, n * k).reshape(&[b * n, k])).reshape(&[b, n * h]);

        let temb = g.var(time_embedding(t, h));
        let temb = self.time2.forward(p, self.time1.forward(p, temb).tanh());

        let keep = Tensor::from_fn(&[b, h], |i| if dropped[i / h] { F::zero() } else { F::one() });
        let drop = keep.map(|v| F::one() - v);
        let yv = g.var(y.clone());
        let cemb = g.var(keep) * self.cond.forward(p, yv) + g.var(drop) * p[self.null].tile(&[b]);

        let s = c.seq_len();
        let mut x = cemb.concat(temb).concat(toks).reshape(&[b, s, h]).add_tiled(p[self.pos]).reshape(&[b * s, h]);
        let mask = g.var(causal_mask::<F>(b, s));
        for block in &self.blocks {
            x = block.forward(p, x, b, s, Some(mask));
        }
        let x = self.ln_f.forward(p, x).reshape(&[b, s * h]).slice(2 * h, n * h).reshape(&[b * n, h]);
        Ok(self.tok_out.forward(p, x).reshape(&[b, n * k]).slice(0, m))
    }

    /// Inference helper on plain tensors.
    pub fn predict(&self, r_t: &Tensor<F>, t: &[usize], y: &Tensor<F>, dropped: &[bool]) -> Result<Tensor<F>> {
        let g = Graph::new();
        let p = self.params.bind(&g);
        Ok(self.forward(&p, g.var(r_t.clone()), t, y, dropped)?.value())
    }
}

/// Sinusoidal embedding of integer steps: `[sin(t f_i), cos(t f_i)]`, `f_i = 10000^(-i/half)`.
pub fn time_embedding<F: Real>(t: &[usize], dim: usize) -> Tensor<F> {
    let half = dim / 2;
    let mut data = vec![F::zero(); t.len() * dim];
    for (row, &step) in t.iter().enumerate() {
        for i in 0..half {
            let freq = (-(10000f64.ln()) * i as f64 / half as f64).exp();
            let a = step as f64 * freq;
            data[row * dim + i] = F::lit(a.sin());
            data[row * dim + half + i] = F::lit(a.cos());
        }
    }
    Tensor::from_parts(vec![t.len(), dim], data)
}

fn causal_mask<F: Real>(b: usize, s: usize) -> Tensor<F> {
    let neg = F::lit(-1e9);
    Tensor::from_fn(&[b, s, s], |idx| {
        let (i, j) = ((idx / s) % s, idx % s);
        if j > i {
            neg
        } else {
            F::zero()
        }
    })
}
