use rand::Rng;

use super::models::{gumbel_noise, GanNets, GanShape};
use crate::error::{Error, Result};
use crate::numerics::{gaussian, Bound, Graph, Real, SeededRng, Tensor, Var};

/// One training batch: sequences `x [B, L*A]`, conditions `u [B, c]`, labels `y [B, d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GanBatch<F> {
    pub x: Tensor<F>,
    pub u: Tensor<F>,
    pub y: Tensor<F>,
}

impl<F: Real> GanBatch<F> {
    pub fn len(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Random inputs of one loss evaluation, fixed so losses can be replayed.
#[derive(Debug, Clone, PartialEq)]
pub struct GanDraw<F> {
    pub z: Tensor<F>,
    /// Interpolation weights for the penalty, one per row.
    pub eps: Vec<F>,
    pub gumbel: Option<Tensor<F>>,
}

impl<F: Real> GanDraw<F> {
    pub fn sample(batch: usize, shape: &GanShape, gumbel: bool, rng: &mut SeededRng) -> Self {
        let z = gaussian(&[batch, shape.noise], rng);
        let eps = (0..batch).map(|_| F::lit(rng.random_range(0.0..1.0))).collect();
        let gumbel = gumbel.then(|| gumbel_noise(&[batch, shape.seq_width()], rng));
        GanDraw { z, eps, gumbel }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    /// Gradient-penalty weight λ.
    pub lambda: f64,
    /// Auxiliary-classifier weight β.
    pub beta: f64,
    /// Gumbel-softmax temperature; `None` uses the plain softmax.
    pub tau: Option<f64>,
}

/// Parameters of all three networks recorded on one graph.
pub struct GanBound<'g, F: Real> {
    pub generator: Bound<'g, F>,
    pub critic: Bound<'g, F>,
    pub classifier: Bound<'g, F>,
}

impl<F: Real> GanNets<F> {
    pub fn bind<'g>(&self, g: &'g Graph<F>) -> GanBound<'g, F> {
        GanBound {
            generator: self.generator.params().bind(g),
            critic: self.critic.params().bind(g),
            classifier: self.classifier.params().bind(g),
        }
    }

    fn fake<'g>(&self, p: &GanBound<'g, F>, u: Var<'g, F>, draw: &GanDraw<F>, w: &LossWeights) -> Result<Var<'g, F>> {
        let g = u.graph();
        let gumbel = match (&draw.gumbel, w.tau) {
            (Some(n), Some(tau)) => Some((n, tau)),
            _ => None,
        };
        self.generator.forward(&p.generator, g.var(draw.z.clone()), u, gumbel)
    }
}

/// `mean_i (||∇ critic(x̂)_i|| - 1)^2` at `x̂ = ε x_real + (1 - ε) x_fake`.
///
/// `critic` maps `[B, n]` inputs to `[B]` scores with rows scored independently.
pub fn gradient_penalty_with<'g, F: Real>(
    x_real: Var<'g, F>,
    x_fake: Var<'g, F>,
    eps: &[F],
    critic: impl FnOnce(Var<'g, F>) -> Result<Var<'g, F>>,
) -> Result<Var<'g, F>> {
    let shape = x_real.shape();
    if shape != x_fake.shape() || shape.len() != 2 || eps.len() != shape[0] || shape[0] == 0 {
        return Err(Error::shape(
            "gradient_penalty",
            format!("real {:?}, fake {:?}, {} weights", shape, x_fake.shape(), eps.len()),
        ));
    }
    let (b, n) = (shape[0], shape[1]);
    let g = x_real.graph();
    let e = Tensor::from_fn(&[b, n], |i| eps[i / n]);
    let one_minus = e.map(|v| F::one() - v);
    let x_hat = g.var(e) * x_real + g.var(one_minus) * x_fake;
    let scores = critic(x_hat)?;
    let grad = g.grad(scores.sum(), &[x_hat])?[0];
    let norm = grad.square().sum_last().add_scalar(F::min_positive_value().as_f64()).sqrt();
    Ok(norm.add_scalar(-1.0).square().mean())
}

/// Penalty of the model critic with interpolation weights drawn from `seed`.
pub fn gradient_penalty<F: Real>(
    nets: &GanNets<F>,
    x_real: &Tensor<F>,
    x_fake: &Tensor<F>,
    u: &Tensor<F>,
    seed: u64,
) -> Result<F> {
    let b = x_real.shape().first().copied().unwrap_or(0);
    let mut rng = crate::numerics::seeded(seed);
    let eps: Vec<F> = (0..b).map(|_| F::lit(rng.random_range(0.0..1.0))).collect();
    let g = Graph::new();
    let p = nets.critic.params().bind(&g);
    let uv = g.var(u.clone());
    let pen = gradient_penalty_with(g.var(x_real.clone()), g.var(x_fake.clone()), &eps, |x| nets.critic.forward(&p, x, uv))?;
    Ok(pen.item())
}

/// Channel targets `[B, 2d]`: `[y, 0]` for real samples, `[0, y]` for generated ones.
pub fn class_targets<F: Real>(y: &Tensor<F>, real: bool) -> Tensor<F> {
    let (b, d) = (y.shape()[0], y.shape()[1]);
    Tensor::from_fn(&[b, 2 * d], |i| {
        let (row, col) = (i / (2 * d), i % (2 * d));
        match (real, col < d) {
            (true, true) => y.data()[row * d + col],
            (false, false) => y.data()[row * d + col - d],
            _ => F::zero(),
        }
    })
}

/// Mean Bernoulli log-likelihood of `target` under `sigmoid(logits)`.
pub fn class_log_likelihood<'g, F: Real>(logits: Var<'g, F>, target: &Tensor<F>) -> Var<'g, F> {
    let t = logits.graph().var(target.clone());
    -(logits.softplus() - t * logits).mean()
}

fn channel_accuracy<F: Real>(logits: &Tensor<F>, target: &Tensor<F>) -> f64 {
    crate::encoder::micro_accuracy(logits, target)
}

/// Value of the critic objective together with its parts.
pub struct CriticTerms<'g, F: Real> {
    pub loss: Var<'g, F>,
    /// `mean D(real) - mean D(fake)`.
    pub wasserstein: f64,
    pub penalty: f64,
    /// Channel accuracy of the classifier on the real and generated halves.
    pub class_accuracy: f64,
}

fn check_batch<F: Real>(s: &GanShape, batch: &GanBatch<F>, draw: &GanDraw<F>) -> Result<()> {
    let b = batch.len();
    let ok = b > 0
        && batch.x.shape() == [b, s.seq_width()]
        && batch.u.shape() == [b, s.cond]
        && batch.y.shape() == [b, s.labels]
        && draw.z.shape() == [b, s.noise]
        && draw.eps.len() == b;
    if !ok {
        return Err(Error::shape(
            "gan_loss",
            format!(
                "x {:?}, u {:?}, y {:?}, z {:?}, {} eps for shape {s:?}",
                batch.x.shape(),
                batch.u.shape(),
                batch.y.shape(),
                draw.z.shape(),
                draw.eps.len()
            ),
        ));
    }
    Ok(())
}

/// `E[D(G(z,u),u)] - E[D(x,u)] + λ Pen(D) - β (E_real[log C(label, real | x)] + E_fake[log C(label, generated | G)])`.
pub fn critic_loss<'g, F: Real>(
    nets: &GanNets<F>,
    p: &GanBound<'g, F>,
    batch: &GanBatch<F>,
    draw: &GanDraw<F>,
    w: &LossWeights,
) -> Result<CriticTerms<'g, F>> {
    check_batch(&nets.shape(), batch, draw)?;
    let g = p.critic.vars()[0].graph();
    let u = g.var(batch.u.clone());
    let x = g.var(batch.x.clone());
    let fake = nets.fake(p, u, draw, w)?;
    let d_real = nets.critic.forward(&p.critic, x, u)?.mean();
    let d_fake = nets.critic.forward(&p.critic, fake, u)?.mean();
    let pen = gradient_penalty_with(x, fake, &draw.eps, |xh| nets.critic.forward(&p.critic, xh, u))?;
    let mut loss = d_fake - d_real + pen.scale(w.lambda);
    let t_real = class_targets(&batch.y, true);
    let t_gen = class_targets(&batch.y, false);
    let c_real = nets.classifier.forward(&p.classifier, x)?;
    let c_fake = nets.classifier.forward(&p.classifier, fake)?;
    let class_accuracy = 0.5 * (channel_accuracy(&c_real.value(), &t_real) + channel_accuracy(&c_fake.value(), &t_gen));
    if w.beta != 0.0 {
        let ll = class_log_likelihood(c_real, &t_real) + class_log_likelihood(c_fake, &t_gen);
        loss = loss - ll.scale(w.beta);
    }
    Ok(CriticTerms {
        loss,
        wasserstein: (d_real.item() - d_fake.item()).as_f64(),
        penalty: pen.item().as_f64(),
        class_accuracy,
    })
}

/// `-E[D(G(z,u),u)] - β (E_fake[log C(label, real | G)] - E_fake[log C(label, generated | G)])`.
pub fn generator_loss<'g, F: Real>(
    nets: &GanNets<F>,
    p: &GanBound<'g, F>,
    batch: &GanBatch<F>,
    draw: &GanDraw<F>,
    w: &LossWeights,
) -> Result<Var<'g, F>> {
    check_batch(&nets.shape(), batch, draw)?;
    let g = p.critic.vars()[0].graph();
    let u = g.var(batch.u.clone());
    let fake = nets.fake(p, u, draw, w)?;
    let mut loss = -nets.critic.forward(&p.critic, fake, u)?.mean();
    if w.beta != 0.0 {
        let c_fake = nets.classifier.forward(&p.classifier, fake)?;
        let toward = class_log_likelihood(c_fake, &class_targets(&batch.y, true));
        let away = class_log_likelihood(c_fake, &class_targets(&batch.y, false));
        loss = loss - (toward - away).scale(w.beta);
    }
    Ok(loss)
}
