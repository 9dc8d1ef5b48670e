use rand::Rng;

use super::loss::{critic_loss, generator_loss, GanBatch, GanDraw, LossWeights};
use super::models::{GanNets, GanShape};
use crate::checkpoint::Checkpoint;
use crate::encoder::Embeddings;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, seeded, AdamConfig, AdamState, Graph, ParamSet, Tensor};
use crate::seqdata::{Dataset, LabelVocabulary, SequenceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct GanTrainConfig {
    pub lambda: f64,
    pub beta: f64,
    pub n_critic: usize,
    pub lr: f64,
    pub batch: usize,
    /// Generator updates.
    pub iterations: usize,
    pub seed: u64,
    /// Gumbel-softmax temperature for generated samples during training.
    pub tau: Option<f64>,
    pub noise: usize,
    pub hidden: usize,
    pub channels: usize,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        GanTrainConfig {
            lambda: 10.0,
            beta: 175.0,
            n_critic: 5,
            lr: 1e-4,
            batch: 64,
            iterations: 1000,
            seed: 0,
            tau: None,
            noise: 32,
            hidden: 256,
            channels: 32,
        }
    }
}

impl GanTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.beta >= 0.0) {
            return Err(Error::Config(format!("lambda {} and beta {} must be >= 0", self.lambda, self.beta)));
        }
        if self.n_critic == 0 || self.batch == 0 {
            return Err(Error::Config("n_critic and batch must be positive".into()));
        }
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tau {t} must be positive")));
            }
        }
        Ok(())
    }

    fn weights(&self) -> LossWeights {
        LossWeights { lambda: self.lambda, beta: self.beta, tau: self.tau }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Critic,
    Generator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    /// Generator iteration this step belongs to.
    pub iteration: usize,
    pub kind: StepKind,
    pub loss: f64,
    pub wasserstein: f64,
    pub penalty: f64,
    pub class_accuracy: f64,
}

/// Trained networks with the vocabulary and the representation standardisation.
#[derive(Debug, Clone)]
pub struct SeqGan {
    pub nets: GanNets<f32>,
    pub vocab: LabelVocabulary,
    pub shift: Vec<f32>,
    pub scale: Vec<f32>,
    /// Gumbel temperature used in training; sampling then perturbs logits with Gumbel noise too.
    pub tau: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedGan {
    /// Last parameters for which every loss was finite.
    pub gan: SeqGan,
    pub log: Vec<StepLog>,
    /// Set when training stopped on a non-finite loss.
    pub diverged: Option<String>,
}

impl SeqGan {
    pub fn shape(&self) -> GanShape {
        self.nets.shape()
    }

    /// Width of representations the generator is conditioned on.
    pub fn rep_width(&self) -> usize {
        self.shift.len()
    }

    /// Condition rows `[standardised r, y]`.
    pub fn condition(&self, r: &[f32], y: &[f32]) -> Result<Vec<f32>> {
        let (w, d) = (self.rep_width(), self.vocab.len());
        if r.len() != w || y.len() != d {
            return Err(Error::Width(format!(
                "condition needs representation width {w} and {d} labels, got {} and {}",
                r.len(),
                y.len()
            )));
        }
        let mut out: Vec<f32> = r.iter().zip(&self.shift).zip(&self.scale).map(|((v, s), c)| (v - s) / c).collect();
        out.extend_from_slice(y);
        Ok(out)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ck = Checkpoint::new();
        ck.extend(self.nets.generator.params().named("generator"))?;
        ck.extend(self.nets.critic.params().named("critic"))?;
        ck.extend(self.nets.classifier.params().named("classifier"))?;
        let w = self.rep_width();
        ck.insert("norm/shift", Tensor::new(vec![w], self.shift.clone())?)?;
        ck.insert("norm/scale", Tensor::new(vec![w], self.scale.clone())?)?;
        let s = self.shape();
        ck.set_meta("kind", "gan");
        ck.set_meta("max_len", s.max_len);
        ck.set_meta("alphabet", s.alphabet);
        ck.set_meta("rep_width", w);
        ck.set_meta("noise", s.noise);
        ck.set_meta("hidden", s.hidden);
        ck.set_meta("channels", s.channels);
        ck.set_meta("kernel", s.kernel);
        ck.set_meta("vocab", self.vocab.terms().join(";"));
        ck.set_meta("tau", self.tau.map_or_else(|| "none".to_string(), |t| t.to_string()));
        Ok(ck)
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        crate::encoder::expect_kind(ck, "gan")?;
        let vocab = crate::latentdiff::parse_vocab_meta(ck)?;
        let rep_width: usize = ck.meta_parse("rep_width")?;
        let shape = GanShape {
            max_len: ck.meta_parse("max_len")?,
            alphabet: ck.meta_parse("alphabet")?,
            cond: rep_width + vocab.len(),
            noise: ck.meta_parse("noise")?,
            hidden: ck.meta_parse("hidden")?,
            channels: ck.meta_parse("channels")?,
            kernel: ck.meta_parse("kernel")?,
            labels: vocab.len(),
        };
        let mut nets = GanNets::new(shape, 0)?;
        nets.generator.params_mut().load_named("generator", |k| ck.get(k))?;
        nets.critic.params_mut().load_named("critic", |k| ck.get(k))?;
        nets.classifier.params_mut().load_named("classifier", |k| ck.get(k))?;
        let read = |name: &str| -> Result<Vec<f32>> {
            let t = ck.require(name)?;
            if t.numel() != rep_width {
                return Err(Error::Checkpoint(format!("`{name}` has {} values, expected {rep_width}", t.numel())));
            }
            Ok(t.data().to_vec())
        };
        let tau = match ck.meta("tau") {
            None | Some("none") => None,
            Some(_) => Some(ck.meta_parse("tau")?),
        };
        Ok(SeqGan { nets, vocab, shift: read("norm/shift")?, scale: read("norm/scale")?, tau })
    }
}

/// Alternates `n_critic` critic/classifier updates with one generator update.
pub fn train_gan(ds: &Dataset, reps: &Embeddings, cfg: &GanTrainConfig) -> Result<TrainedGan> {
    cfg.validate()?;
    if ds.train.is_empty() {
        return Err(Error::Contract("train_gan needs training records".into()));
    }
    let w = reps.width();
    let d = ds.label_count();
    let train: Vec<&SequenceRecord> = ds.train.iter().collect();
    let mut rep_rows = Vec::with_capacity(train.len() * w);
    for r in &train {
        rep_rows.extend_from_slice(reps.get(&r.id)?);
    }
    let (shift, scale) = column_standardisation(&rep_rows, train.len(), w);
    let x_all = ds.one_hot_batch::<f32>(&train)?;
    let y_all = ds.label_batch::<f32>(&train);

    let mut shape = GanShape::new(ds.max_len, w, d);
    shape.alphabet = ds.alphabet.size();
    shape.noise = cfg.noise;
    shape.hidden = cfg.hidden;
    shape.channels = cfg.channels;
    let nets = GanNets::<f32>::new(shape, derive_seed(cfg.seed, 0))?;
    let mut gan = SeqGan { nets, vocab: ds.vocab.clone(), shift, scale, tau: cfg.tau };
    let mut cond_all = Vec::with_capacity(train.len() * shape.cond);
    for (i, _) in train.iter().enumerate() {
        cond_all.extend(gan.condition(&rep_rows[i * w..(i + 1) * w], y_all.row(i))?);
    }

    let mut opt_g = AdamState::new(AdamConfig::ADVERSARIAL, gan.nets.generator.params().values());
    let mut opt_d = AdamState::new(AdamConfig::ADVERSARIAL, gan.nets.critic.params().values());
    let mut opt_c = AdamState::new(AdamConfig::ADVERSARIAL, gan.nets.classifier.params().values());
    let mut rng = seeded(derive_seed(cfg.seed, 1));
    let weights = cfg.weights();
    let n = train.len();
    let bsz = cfg.batch.min(n);
    let gather = |src: &[f32], width: usize, idx: &[usize]| {
        Tensor::from_fn(&[idx.len(), width], |i| src[idx[i / width] * width + i % width])
    };
    let mut log = Vec::with_capacity(cfg.iterations * (cfg.n_critic + 1));
    let mut last_good = gan.nets.clone();
    for it in 0..cfg.iterations {
        for _ in 0..=cfg.n_critic {
            let critic_turn = log.len() % (cfg.n_critic + 1) < cfg.n_critic;
            let idx: Vec<usize> = (0..bsz).map(|_| rng.random_range(0..n)).collect();
            let batch = GanBatch {
                x: gather(x_all.data(), shape.seq_width(), &idx),
                u: gather(&cond_all, shape.cond, &idx),
                y: gather(y_all.data(), d, &idx),
            };
            let draw = GanDraw::sample(bsz, &shape, cfg.tau.is_some(), &mut rng);
            let g = Graph::new();
            let p = gan.nets.bind(&g);
            let entry = if critic_turn {
                let terms = critic_loss(&gan.nets, &p, &batch, &draw, &weights)?;
                let value = terms.loss.item() as f64;
                if !value.is_finite() {
                    return Ok(abort(gan, last_good, log, format!("critic loss {value} at iteration {it}")));
                }
                let nd = p.critic.vars().len();
                let wrt: Vec<_> = p.critic.vars().iter().chain(p.classifier.vars()).copied().collect();
                let grads: Vec<Tensor<f32>> = g.grad(terms.loss, &wrt)?.iter().map(|v| v.value()).collect();
                opt_d.step(gan.nets.critic.params_mut().values_mut(), &grads[..nd], cfg.lr)?;
                opt_c.step(gan.nets.classifier.params_mut().values_mut(), &grads[nd..], cfg.lr)?;
                StepLog {
                    iteration: it,
                    kind: StepKind::Critic,
                    loss: value,
                    wasserstein: terms.wasserstein,
                    penalty: terms.penalty,
                    class_accuracy: terms.class_accuracy,
                }
            } else {
                let loss = generator_loss(&gan.nets, &p, &batch, &draw, &weights)?;
                let value = loss.item() as f64;
                if !value.is_finite() {
                    return Ok(abort(gan, last_good, log, format!("generator loss {value} at iteration {it}")));
                }
                let grads = p.generator.grads(loss)?;
                opt_g.step(gan.nets.generator.params_mut().values_mut(), &grads, cfg.lr)?;
                StepLog { iteration: it, kind: StepKind::Generator, loss: value, wasserstein: f64::NAN, penalty: f64::NAN, class_accuracy: f64::NAN }
            };
            log.push(entry);
        }
        if !all_finite(&gan.nets) {
            return Ok(abort(gan, last_good, log, format!("non-finite parameters after iteration {it}")));
        }
        last_good = gan.nets.clone();
        if it % 50 == 0 || it + 1 == cfg.iterations {
            let c = log.iter().rev().find(|s| s.kind == StepKind::Critic).expect("critic step logged");
            log::info!(
                "gan iteration {it}: wasserstein={:.4} penalty={:.4} class_acc={:.3} g_loss={:.4}",
                c.wasserstein,
                c.penalty,
                c.class_accuracy,
                log.last().map_or(f64::NAN, |s| s.loss)
            );
        }
    }
    Ok(TrainedGan { gan, log, diverged: None })
}

fn abort(mut gan: SeqGan, last_good: GanNets<f32>, log: Vec<StepLog>, why: String) -> TrainedGan {
    log::error!("gan training diverged: {why}");
    gan.nets = last_good;
    TrainedGan { gan, log, diverged: Some(why) }
}

fn all_finite(nets: &GanNets<f32>) -> bool {
    let ok = |ps: &ParamSet<f32>| ps.values().iter().all(Tensor::all_finite);
    ok(nets.generator.params()) && ok(nets.critic.params()) && ok(nets.classifier.params())
}

fn column_standardisation(data: &[f32], n: usize, m: usize) -> (Vec<f32>, Vec<f32>) {
    let mut mean = vec![0f64; m];
    let mut sq = vec![0f64; m];
    for row in data.chunks(m) {
        for j in 0..m {
            mean[j] += row[j] as f64;
        }
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    for row in data.chunks(m) {
        for j in 0..m {
            sq[j] += (row[j] as f64 - mean[j]).powi(2);
        }
    }
    let scale = sq
        .iter()
        .map(|s| {
            let sd = (s / n as f64).sqrt();
            if sd > 1e-6 {
                sd as f32
            } else {
                1.0
            }
        })
        .collect();
    (mean.iter().map(|&v| v as f32).collect(), scale)
}
