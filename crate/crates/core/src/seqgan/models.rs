use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{seeded, Bound, Graph, Linear, ParamSet, Real, SeededRng, Tensor, Var};

/// Extents shared by the three adversarial networks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GanShape {
    pub max_len: usize,
    pub alphabet: usize,
    /// Width of the condition `u = (r, y)`.
    pub cond: usize,
    pub noise: usize,
    pub hidden: usize,
    pub channels: usize,
    pub kernel: usize,
    pub labels: usize,
}

impl GanShape {
    pub fn new(max_len: usize, rep_width: usize, labels: usize) -> Self {
        GanShape {
            max_len,
            alphabet: 21,
            cond: rep_width + labels,
            noise: 32,
            hidden: 256,
            channels: 32,
            kernel: 5,
            labels,
        }
    }

    pub fn seq_width(&self) -> usize {
        self.max_len * self.alphabet
    }

    fn validate(&self) -> Result<()> {
        if self.max_len == 0 || self.alphabet == 0 || self.cond == 0 || self.noise == 0 || self.hidden == 0 || self.channels == 0 || self.kernel % 2 == 0 || self.labels == 0 {
            return Err(Error::Config(format!("bad GAN extents {self:?}")));
        }
        Ok(())
    }
}

const SLOPE: f64 = 0.2;

/// `G(z, u)`: MLP with the projected condition added at every layer,
/// emitting per-position probabilities `[B, L*A]`.
#[derive(Debug, Clone)]
pub struct Generator<F: Real = f32> {
    pub shape: GanShape,
    params: ParamSet<F>,
    fc1: Linear,
    fc2: Linear,
    out: Linear,
    c1: Linear,
    c2: Linear,
    c3: Linear,
}

impl<F: Real> Generator<F> {
    pub fn new(shape: GanShape, rng: &mut SeededRng) -> Result<Self> {
        shape.validate()?;
        let GanShape { noise, hidden, cond, .. } = shape;
        let w = shape.seq_width();
        let mut ps = ParamSet::new();
        let fc1 = Linear::new(&mut ps, "fc1", noise, hidden, rng);
        let fc2 = Linear::new(&mut ps, "fc2", hidden, hidden, rng);
        let out = Linear::new(&mut ps, "out", hidden, w, rng);
        let c1 = Linear::new(&mut ps, "cond1", cond, hidden, rng);
        let c2 = Linear::new(&mut ps, "cond2", cond, hidden, rng);
        let c3 = Linear::new(&mut ps, "cond3", cond, w, rng);
        Ok(Generator { shape, params: ps, fc1, fc2, out, c1, c2, c3 })
    }

    pub fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }

    /// Position-wise logits `[B, L*A]`.
    pub fn logits<'g>(&self, p: &Bound<'g, F>, z: Var<'g, F>, u: Var<'g, F>) -> Result<Var<'g, F>> {
        let s = &self.shape;
        let b = z.shape()[0];
        if z.shape() != [b, s.noise] || u.shape() != [b, s.cond] {
            return Err(Error::shape(
                "generator_forward",
                format!("z {:?}, u {:?}; expected [B, {}] and [B, {}]", z.shape(), u.shape(), s.noise, s.cond),
            ));
        }
        let h = (self.fc1.forward(p, z) + self.c1.forward(p, u)).leaky_relu(SLOPE);
        let h = (self.fc2.forward(p, h) + self.c2.forward(p, u)).leaky_relu(SLOPE);
        Ok(self.out.forward(p, h) + self.c3.forward(p, u))
    }

    /// Relaxed one-hot output; `gumbel` is optional `(noise [B, L*A], tau)`.
    pub fn forward<'g>(
        &self,
        p: &Bound<'g, F>,
        z: Var<'g, F>,
        u: Var<'g, F>,
        gumbel: Option<(&Tensor<F>, f64)>,
    ) -> Result<Var<'g, F>> {
        let s = &self.shape;
        let mut logits = self.logits(p, z, u)?;
        let b = logits.shape()[0];
        if let Some((g, tau)) = gumbel {
            logits = (logits + z.graph().var(g.clone())).scale(1.0 / tau);
        }
        Ok(logits.reshape(&[b * s.max_len, s.alphabet]).softmax().reshape(&[b, s.seq_width()]))
    }

    pub fn generate(&self, z: &Tensor<F>, u: &Tensor<F>, gumbel: Option<(&Tensor<F>, f64)>) -> Result<Tensor<F>> {
        let g = Graph::new();
        let p = self.params.bind(&g);
        Ok(self.forward(&p, g.var(z.clone()), g.var(u.clone()), gumbel)?.value())
    }

    pub fn cast<G: Real>(&self) -> Generator<G> {
        Generator { shape: self.shape, params: self.params.cast(), fc1: self.fc1, fc2: self.fc2, out: self.out, c1: self.c1, c2: self.c2, c3: self.c3 }
    }
}

/// Standard Gumbel noise `-ln(-ln U)`.
pub fn gumbel_noise<F: Real>(shape: &[usize], rng: &mut SeededRng) -> Tensor<F> {
    Tensor::from_fn(shape, |_| {
        let u: f64 = rng.random_range(1e-12..1.0);
        F::lit(-(-u.ln()).ln())
    })
}

/// Convolution over the one-hot rows, then a dense layer; shared by critic and classifier.
#[derive(Debug, Clone, Copy)]
struct ConvTrunk {
    conv: Linear,
    fc: Linear,
}

impl ConvTrunk {
    fn new<F: Real>(ps: &mut ParamSet<F>, s: &GanShape, rng: &mut SeededRng) -> Self {
        ConvTrunk {
            conv: Linear::new(ps, "conv", s.kernel * s.alphabet, s.channels, rng),
            fc: Linear::new(ps, "fc", s.max_len * s.channels, s.hidden, rng),
        }
    }

    /// `extra` are optional per-layer condition terms `([B*L, C], [B, H])`.
    fn forward<'g, F: Real>(
        &self,
        p: &Bound<'g, F>,
        s: &GanShape,
        x: Var<'g, F>,
        extra: Option<(Var<'g, F>, Var<'g, F>)>,
    ) -> Result<Var<'g, F>> {
        let b = x.shape()[0];
        if x.shape() != [b, s.seq_width()] {
            return Err(Error::shape("critic", format!("x {:?}, expected [B, {}]", x.shape(), s.seq_width())));
        }
        let cols = x.reshape(&[b, s.max_len, s.alphabet]).unfold1d(s.kernel, s.kernel / 2);
        let mut h = self.conv.forward(p, cols);
        if let Some((c, _)) = extra {
            h = h + c;
        }
        let h = h.leaky_relu(SLOPE).reshape(&[b, s.max_len * s.channels]);
        let mut h = self.fc.forward(p, h);
        if let Some((_, c)) = extra {
            h = h + c;
        }
        Ok(h.leaky_relu(SLOPE))
    }
}

/// Wasserstein critic `D(x, u)`; no output nonlinearity.
#[derive(Debug, Clone)]
pub struct Critic<F: Real = f32> {
    pub shape: GanShape,
    params: ParamSet<F>,
    trunk: ConvTrunk,
    c_conv: Linear,
    c_fc: Linear,
    out: Linear,
}

impl<F: Real> Critic<F> {
    pub fn new(shape: GanShape, rng: &mut SeededRng) -> Result<Self> {
        shape.validate()?;
        let mut ps = ParamSet::new();
        let trunk = ConvTrunk::new(&mut ps, &shape, rng);
        let c_conv = Linear::new(&mut ps, "cond_conv", shape.cond, shape.channels, rng);
        let c_fc = Linear::new(&mut ps, "cond_fc", shape.cond, shape.hidden, rng);
        let out = Linear::new(&mut ps, "out", shape.hidden, 1, rng);
        Ok(Critic { shape, params: ps, trunk, c_conv, c_fc, out })
    }

    pub fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }

    /// Scores `[B]`.
    pub fn forward<'g>(&self, p: &Bound<'g, F>, x: Var<'g, F>, u: Var<'g, F>) -> Result<Var<'g, F>> {
        let s = &self.shape;
        let b = x.shape()[0];
        if u.shape() != [b, s.cond] {
            return Err(Error::shape("critic", format!("u {:?}, expected [{b}, {}]", u.shape(), s.cond)));
        }
        let cc = self.c_conv.forward(p, u).repeat_rows(s.max_len);
        let cf = self.c_fc.forward(p, u);
        let h = self.trunk.forward(p, s, x, Some((cc, cf)))?;
        Ok(self.out.forward(p, h).reshape(&[b]))
    }

    pub fn cast<G: Real>(&self) -> Critic<G> {
        Critic { shape: self.shape, params: self.params.cast(), trunk: self.trunk, c_conv: self.c_conv, c_fc: self.c_fc, out: self.out }
    }
}

/// Auxiliary classifier with `2d` logits: `(label, real)` then `(label, generated)`.
#[derive(Debug, Clone)]
pub struct AuxClassifier<F: Real = f32> {
    pub shape: GanShape,
    params: ParamSet<F>,
    trunk: ConvTrunk,
    out: Linear,
}

impl<F: Real> AuxClassifier<F> {
    pub fn new(shape: GanShape, rng: &mut SeededRng) -> Result<Self> {
        shape.validate()?;
        let mut ps = ParamSet::new();
        let trunk = ConvTrunk::new(&mut ps, &shape, rng);
        let out = Linear::new(&mut ps, "out", shape.hidden, 2 * shape.labels, rng);
        Ok(AuxClassifier { shape, params: ps, trunk, out })
    }

    pub fn params(&self) -> &ParamSet<F> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<F> {
        &mut self.params
    }

    /// Logits `[B, 2d]`.
    pub fn forward<'g>(&self, p: &Bound<'g, F>, x: Var<'g, F>) -> Result<Var<'g, F>> {
        let h = self.trunk.forward(p, &self.shape, x, None)?;
        Ok(self.out.forward(p, h))
    }

    pub fn cast<G: Real>(&self) -> AuxClassifier<G> {
        AuxClassifier { shape: self.shape, params: self.params.cast(), trunk: self.trunk, out: self.out }
    }
}

/// The three networks trained together.
#[derive(Debug, Clone)]
pub struct GanNets<F: Real = f32> {
    pub generator: Generator<F>,
    pub critic: Critic<F>,
    pub classifier: AuxClassifier<F>,
}

impl<F: Real> GanNets<F> {
    pub fn new(shape: GanShape, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        Ok(GanNets {
            generator: Generator::new(shape, &mut rng)?,
            critic: Critic::new(shape, &mut rng)?,
            classifier: AuxClassifier::new(shape, &mut rng)?,
        })
    }

    pub fn shape(&self) -> GanShape {
        self.generator.shape
    }

    pub fn cast<G: Real>(&self) -> GanNets<G> {
        GanNets { generator: self.generator.cast(), critic: self.critic.cast(), classifier: self.classifier.cast() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sample_gaussian;

    fn shape() -> GanShape {
        GanShape { max_len: 6, alphabet: 21, cond: 5, noise: 4, hidden: 8, channels: 3, kernel: 3, labels: 2 }
    }

    #[test]
    fn generator_rows_are_distributions() {
        let nets = GanNets::<f64>::new(shape(), 1).unwrap();
        let z = sample_gaussian(&[3, 4], 2);
        let u = sample_gaussian(&[3, 5], 3);
        let x = nets.generator.generate(&z, &u, None).unwrap();
        assert_eq!(x.shape(), &[3, 6 * 21]);
        for row in x.data().chunks(21) {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-6);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        assert_eq!(x, nets.generator.generate(&z, &u, None).unwrap());
    }

    #[test]
    fn critic_and_classifier_shapes() {
        let nets = GanNets::<f64>::new(shape(), 1).unwrap();
        let g = Graph::new();
        let x = g.var(sample_gaussian(&[2, 126], 4));
        let u = g.var(sample_gaussian(&[2, 5], 5));
        let d = nets.critic.forward(&nets.critic.params().bind(&g), x, u).unwrap();
        assert_eq!(d.shape(), vec![2]);
        assert!(d.value().all_finite());
        let c = nets.classifier.forward(&nets.classifier.params().bind(&g), x).unwrap();
        assert_eq!(c.shape(), vec![2, 4]);
    }

    #[test]
    fn gumbel_noise_is_finite() {
        let t = gumbel_noise::<f32>(&[1000], &mut seeded(3));
        assert!(t.all_finite());
        let mean = t.sum() / 1000.0;
        assert!((mean - 0.5772).abs() < 0.15, "{mean}");
    }
}
