use rand::Rng;

use super::denoiser::{Denoiser, DenoiserConfig};
use super::schedule::{make_schedule, NoiseSchedule, ScheduleKind};
use crate::checkpoint::Checkpoint;
use crate::encoder::Embeddings;
use crate::error::{Error, Result};
use crate::numerics::{clip_global_norm, derive_seed, gaussian, seeded, AdamConfig, AdamState, Graph, Real, SeededRng, Tensor, Var};
use crate::seqdata::{LabelVector, LabelVocabulary};

/// Random quantities of one `diff_loss` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionDraw<F> {
    pub t: Vec<usize>,
    pub eps: Tensor<F>,
    pub dropped: Vec<bool>,
}

impl<F: Real> DiffusionDraw<F> {
    /// `t` uniform on `1..=T`, standard normal noise, condition dropped with probability `p_uncond`.
    pub fn sample(batch: usize, width: usize, steps: usize, p_uncond: f64, rng: &mut SeededRng) -> Self {
        let t = (0..batch).map(|_| rng.random_range(1..=steps)).collect();
        let dropped = (0..batch).map(|_| rng.random_bool(p_uncond)).collect();
        let eps = gaussian(&[batch, width], rng);
        DiffusionDraw { t, eps, dropped }
    }
}

/// `mean_i ||predict(r_t, t, drop) - r||^2` with `r_t` formed from the draw.
pub fn diff_loss_with<'g, F: Real>(
    r: Var<'g, F>,
    draw: &DiffusionDraw<F>,
    schedule: &NoiseSchedule,
    predict: impl FnOnce(Var<'g, F>, &[usize], &[bool]) -> Result<Var<'g, F>>,
) -> Result<Var<'g, F>> {
    let shape = r.shape();
    if shape.len() != 2 || shape[0] == 0 || draw.t.len() != shape[0] || draw.eps.shape() != shape.as_slice() {
        return Err(Error::shape("diff_loss", format!("batch {:?} vs draw of {} steps", shape, draw.t.len())));
    }
    let (b, m) = (shape[0], shape[1]);
    for &t in &draw.t {
        if t == 0 || t > schedule.steps() {
            return Err(Error::Contract(format!("step {t} outside 1..={}", schedule.steps())));
        }
    }
    let g = r.graph();
    let a = Tensor::from_fn(&[b, m], |i| F::lit(schedule.alpha_bar_at(draw.t[i / m]).sqrt()));
    let s = Tensor::from_fn(&[b, m], |i| F::lit((1.0 - schedule.alpha_bar_at(draw.t[i / m])).sqrt()));
    let r_t = g.var(a) * r + g.var(s) * g.var(draw.eps.clone());
    let pred = predict(r_t, &draw.t, &draw.dropped)?;
    Ok((pred - r).square().sum().scale(1.0 / b as f64))
}

impl<F: Real> Denoiser<F> {
    /// Training loss of this model on `(r, y)` under a fixed draw.
    pub fn diff_loss<'g>(
        &self,
        p: &crate::numerics::Bound<'g, F>,
        r: Var<'g, F>,
        y: &Tensor<F>,
        draw: &DiffusionDraw<F>,
        schedule: &NoiseSchedule,
    ) -> Result<Var<'g, F>> {
        diff_loss_with(r, draw, schedule, |r_t, t, dropped| self.forward(p, r_t, t, y, dropped))
    }
}

/// Scalar diffusion loss with the draw derived from `seed`.
pub fn diff_loss<F: Real>(
    model: &Denoiser<F>,
    r: &Tensor<F>,
    y: &Tensor<F>,
    schedule: &NoiseSchedule,
    p_uncond: f64,
    seed: u64,
) -> Result<F> {
    let shape = r.shape();
    if shape.len() != 2 {
        return Err(Error::shape("diff_loss", format!("r must be [B, m], got {shape:?}")));
    }
    let draw = DiffusionDraw::sample(shape[0], shape[1], schedule.steps(), p_uncond, &mut seeded(seed));
    let g = Graph::new();
    let p = model.params().bind(&g);
    Ok(model.diff_loss(&p, g.var(r.clone()), y, &draw, schedule)?.item())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionTrainConfig {
    /// Diffusion chain length `T`.
    pub steps: usize,
    pub schedule: ScheduleKind,
    pub p_uncond: f64,
    pub lr: f64,
    pub batch: usize,
    /// Optimizer updates.
    pub iterations: usize,
    pub seed: u64,
    pub hidden: usize,
    pub blocks: usize,
    pub chunk: usize,
}

impl Default for DiffusionTrainConfig {
    fn default() -> Self {
        DiffusionTrainConfig {
            steps: 100,
            schedule: ScheduleKind::Linear,
            p_uncond: 0.1,
            lr: 1e-3,
            batch: 64,
            iterations: 2000,
            seed: 0,
            hidden: 64,
            blocks: 2,
            chunk: 8,
        }
    }
}

/// Trained denoiser plus the schedule, label vocabulary and latent standardisation.
#[derive(Debug, Clone)]
pub struct LatentDiffusion {
    pub model: Denoiser<f32>,
    pub schedule: NoiseSchedule,
    pub vocab: LabelVocabulary,
    /// Per-coordinate mean and scale applied before diffusion.
    pub shift: Vec<f32>,
    pub scale: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct TrainedDiffusion {
    pub diffusion: LatentDiffusion,
    /// Loss after every update.
    pub losses: Vec<f64>,
}

/// Fits the denoiser on the raw-width part of `reps` for every labelled id.
pub fn train_diffusion(
    reps: &Embeddings,
    labels: &[(String, LabelVector)],
    vocab: &LabelVocabulary,
    cfg: &DiffusionTrainConfig,
) -> Result<TrainedDiffusion> {
    if labels.is_empty() {
        return Err(Error::Contract("train_diffusion needs at least one labelled representation".into()));
    }
    if !(0.0..1.0).contains(&cfg.p_uncond) {
        return Err(Error::Config(format!("p_uncond {} outside [0, 1)", cfg.p_uncond)));
    }
    if cfg.batch == 0 {
        return Err(Error::Config("batch must be positive".into()));
    }
    let m = reps.raw_width();
    let d = vocab.len();
    let n = labels.len();
    let mut r_all = Vec::with_capacity(n * m);
    let mut y_all = Vec::with_capacity(n * d);
    for (id, y) in labels {
        if y.len() != d {
            return Err(Error::shape("train_diffusion", format!("`{id}` has {} labels, vocabulary {d}", y.len())));
        }
        r_all.extend_from_slice(&reps.get(id)?[..m]);
        y_all.extend(y.to_reals::<f32>());
    }
    let (shift, scale) = standardisation(&r_all, n, m);
    for row in r_all.chunks_mut(m) {
        for ((v, s), c) in row.iter_mut().zip(&shift).zip(&scale) {
            *v = (*v - s) / c;
        }
    }

    let schedule = make_schedule(cfg.steps, cfg.schedule)?;
    let arch = DenoiserConfig { width: m, labels: d, hidden: cfg.hidden, blocks: cfg.blocks, chunk: cfg.chunk };
    let mut model = Denoiser::<f32>::new(arch, derive_seed(cfg.seed, 0))?;
    let mut adam = AdamState::new(AdamConfig::STANDARD, model.params().values());
    let mut rng = seeded(derive_seed(cfg.seed, 1));
    let mut losses = Vec::with_capacity(cfg.iterations);
    let bsz = cfg.batch.min(n);
    for it in 0..cfg.iterations {
        let idx: Vec<usize> = (0..bsz).map(|_| rng.random_range(0..n)).collect();
        let r = Tensor::from_fn(&[bsz, m], |i| r_all[idx[i / m] * m + i % m]);
        let y = Tensor::from_fn(&[bsz, d], |i| y_all[idx[i / d] * d + i % d]);
        let draw = DiffusionDraw::sample(bsz, m, schedule.steps(), cfg.p_uncond, &mut rng);
        let g = Graph::new();
        let p = model.params().bind(&g);
        let loss = model.diff_loss(&p, g.var(r), &y, &draw, &schedule)?;
        let value = loss.item() as f64;
        if !value.is_finite() {
            return Err(Error::Diverged(format!("diffusion loss {value} at iteration {it}")));
        }
        let mut grads = p.grads(loss)?;
        clip_global_norm(&mut grads, 1.0);
        adam.step(model.params_mut().values_mut(), &grads, cfg.lr)?;
        if it % 100 == 0 || it + 1 == cfg.iterations {
            log::info!("diffusion iteration {it}: loss={value:.5}");
        }
        losses.push(value);
    }
    Ok(TrainedDiffusion {
        diffusion: LatentDiffusion { model, schedule, vocab: vocab.clone(), shift, scale },
        losses,
    })
}

/// Column means and standard deviations; constant columns get scale 1.
fn standardisation(data: &[f32], n: usize, m: usize) -> (Vec<f32>, Vec<f32>) {
    let mut mean = vec![0f64; m];
    for row in data.chunks(m) {
        for (a, &v) in mean.iter_mut().zip(row) {
            *a += v as f64;
        }
    }
    mean.iter_mut().for_each(|a| *a /= n as f64);
    let mut var = vec![0f64; m];
    for row in data.chunks(m) {
        for ((a, &v), mu) in var.iter_mut().zip(row).zip(&mean) {
            *a += (v as f64 - mu).powi(2);
        }
    }
    let scale = var
        .iter()
        .map(|v| {
            let s = (v / n as f64).sqrt();
            if s > 1e-6 {
                s as f32
            } else {
                1.0
            }
        })
        .collect();
    (mean.iter().map(|&v| v as f32).collect(), scale)
}

impl LatentDiffusion {
    pub fn width(&self) -> usize {
        self.model.config().width
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ck = Checkpoint::new();
        ck.extend(self.model.params().named("denoiser"))?;
        let m = self.width();
        ck.insert("norm/shift", Tensor::new(vec![m], self.shift.clone())?)?;
        ck.insert("norm/scale", Tensor::new(vec![m], self.scale.clone())?)?;
        let beta: Vec<f32> = self.schedule.beta.iter().map(|&b| b as f32).collect();
        ck.insert("schedule/beta", Tensor::new(vec![beta.len()], beta)?)?;
        let c = self.model.config();
        ck.set_meta("kind", "diffusion");
        ck.set_meta("width", c.width);
        ck.set_meta("labels", c.labels);
        ck.set_meta("hidden", c.hidden);
        ck.set_meta("blocks", c.blocks);
        ck.set_meta("chunk", c.chunk);
        ck.set_meta("steps", self.schedule.steps());
        ck.set_meta("schedule", self.schedule.kind);
        ck.set_meta("vocab", self.vocab.terms().join(";"));
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        crate::encoder::expect_kind(ck, "diffusion")?;
        let arch = DenoiserConfig {
            width: ck.meta_parse("width")?,
            labels: ck.meta_parse("labels")?,
            hidden: ck.meta_parse("hidden")?,
            blocks: ck.meta_parse("blocks")?,
            chunk: ck.meta_parse("chunk")?,
        };
        let mut model = Denoiser::new(arch, 0)?;
        model.params_mut().load_named("denoiser", |k| ck.get(k))?;
        let schedule = make_schedule(ck.meta_parse("steps")?, ck.meta_parse("schedule")?)?;
        let vocab = parse_vocab_meta(ck)?;
        if vocab.len() != arch.labels {
            return Err(Error::Checkpoint(format!("vocabulary has {} terms, model {}", vocab.len(), arch.labels)));
        }
        let read = |name: &str| -> Result<Vec<f32>> {
            let t = ck.require(name)?;
            if t.numel() != arch.width {
                return Err(Error::Checkpoint(format!("`{name}` has {} values, expected {}", t.numel(), arch.width)));
            }
            Ok(t.data().to_vec())
        };
        Ok(LatentDiffusion { model, schedule, vocab, shift: read("norm/shift")?, scale: read("norm/scale")? })
    }
}

pub(crate) fn parse_vocab_meta(ck: &Checkpoint) -> Result<LabelVocabulary> {
    let raw = ck.meta("vocab").ok_or_else(|| Error::Checkpoint("missing metadata `vocab`".into()))?;
    LabelVocabulary::new(raw.split(';').map(str::to_string).collect())
}
