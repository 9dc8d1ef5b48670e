//! Flat `key=value` run configuration.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::latentdiff::ScheduleKind;

/// Learning rates accepted by every training stage.
pub const LR_CHOICES: [f64; 5] = [1e-3, 4e-4, 1e-4, 4e-5, 1e-5];
pub const BATCH_CHOICES: [usize; 3] = [32, 64, 128];
pub const MAX_SEQUENCE_LEN: usize = 2048;

/// Every tunable of a run. Unset optional values are written as `none`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub max_len: usize,
    pub val_fraction: f64,
    /// Representation width `m`.
    pub dim: usize,
    pub encoder_width: usize,
    pub encoder_blocks: usize,
    pub freeze_backbone: bool,
    pub epochs: usize,
    pub lr: f64,
    pub batch: usize,
    /// Stored latent width; `none` keeps `dim`.
    pub pad_to: Option<usize>,
    pub steps: usize,
    pub schedule: ScheduleKind,
    pub p_uncond: f64,
    pub diffusion_iterations: usize,
    pub diffusion_hidden: usize,
    pub diffusion_blocks: usize,
    pub chunk: usize,
    pub beta: f64,
    pub lambda: f64,
    pub n_critic: usize,
    pub gan_iterations: usize,
    pub tau: Option<f64>,
    pub noise: usize,
    pub gan_hidden: usize,
    pub channels: usize,
    pub guidance: Option<f64>,
    pub n: usize,
    pub kmer: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            max_len: 256,
            val_fraction: 0.2,
            dim: 64,
            encoder_width: 64,
            encoder_blocks: 2,
            freeze_backbone: false,
            epochs: 10,
            lr: 1e-5,
            batch: 64,
            pad_to: None,
            steps: 100,
            schedule: ScheduleKind::Linear,
            p_uncond: 0.1,
            diffusion_iterations: 2000,
            diffusion_hidden: 64,
            diffusion_blocks: 2,
            chunk: 8,
            beta: 175.0,
            lambda: 10.0,
            n_critic: 5,
            gan_iterations: 1000,
            tau: None,
            noise: 32,
            gan_hidden: 256,
            channels: 32,
            guidance: None,
            n: 32,
            kmer: 3,
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.trim().eq_ignore_ascii_case("none") {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn opt<T: Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl RunConfig {
    /// Sets one key from its text form; unknown keys are rejected.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse(key, v)?,
            "max_len" => self.max_len = parse(key, v)?,
            "val_fraction" => self.val_fraction = parse(key, v)?,
            "dim" => self.dim = parse(key, v)?,
            "encoder_width" => self.encoder_width = parse(key, v)?,
            "encoder_blocks" => self.encoder_blocks = parse(key, v)?,
            "freeze_backbone" => self.freeze_backbone = parse(key, v)?,
            "epochs" => self.epochs = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "pad_to" => self.pad_to = parse_opt(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "schedule" => self.schedule = parse(key, v)?,
            "p_uncond" => self.p_uncond = parse(key, v)?,
            "diffusion_iterations" => self.diffusion_iterations = parse(key, v)?,
            "diffusion_hidden" => self.diffusion_hidden = parse(key, v)?,
            "diffusion_blocks" => self.diffusion_blocks = parse(key, v)?,
            "chunk" => self.chunk = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "lambda" => self.lambda = parse(key, v)?,
            "n_critic" => self.n_critic = parse(key, v)?,
            "gan_iterations" => self.gan_iterations = parse(key, v)?,
            "tau" => self.tau = parse_opt(key, v)?,
            "noise" => self.noise = parse(key, v)?,
            "gan_hidden" => self.gan_hidden = parse(key, v)?,
            "channels" => self.channels = parse(key, v)?,
            "guidance" => self.guidance = parse_opt(key, v)?,
            "n" => self.n = parse(key, v)?,
            "kmer" => self.kmer = parse(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        let pairs: [(&str, String); 29] = [
            ("seed", self.seed.to_string()),
            ("max_len", self.max_len.to_string()),
            ("val_fraction", self.val_fraction.to_string()),
            ("dim", self.dim.to_string()),
            ("encoder_width", self.encoder_width.to_string()),
            ("encoder_blocks", self.encoder_blocks.to_string()),
            ("freeze_backbone", self.freeze_backbone.to_string()),
            ("epochs", self.epochs.to_string()),
            ("lr", self.lr.to_string()),
            ("batch", self.batch.to_string()),
            ("pad_to", opt(&self.pad_to)),
            ("steps", self.steps.to_string()),
            ("schedule", self.schedule.to_string()),
            ("p_uncond", self.p_uncond.to_string()),
            ("diffusion_iterations", self.diffusion_iterations.to_string()),
            ("diffusion_hidden", self.diffusion_hidden.to_string()),
            ("diffusion_blocks", self.diffusion_blocks.to_string()),
            ("chunk", self.chunk.to_string()),
            ("beta", self.beta.to_string()),
            ("lambda", self.lambda.to_string()),
            ("n_critic", self.n_critic.to_string()),
            ("gan_iterations", self.gan_iterations.to_string()),
            ("tau", opt(&self.tau)),
            ("noise", self.noise.to_string()),
            ("gan_hidden", self.gan_hidden.to_string()),
            ("channels", self.channels.to_string()),
            ("guidance", opt(&self.guidance)),
            ("n", self.n.to_string()),
            ("kmer", self.kmer.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Sorted `key=value` lines; parses back to an equal config.
    pub fn to_text(&self) -> String {
        self.to_map().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Defaults overridden by `text`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: n + 1, msg: format!("expected key=value, got `{line}`") })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse { line: n + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !LR_CHOICES.iter().any(|&c| (self.lr - c).abs() <= 1e-9 * c) {
            return fail(format!("lr {} not in {LR_CHOICES:?}", self.lr));
        }
        if !BATCH_CHOICES.contains(&self.batch) {
            return fail(format!("batch {} not in {BATCH_CHOICES:?}", self.batch));
        }
        if self.max_len == 0 || self.max_len > MAX_SEQUENCE_LEN {
            return fail(format!("max_len {} outside 1..={MAX_SEQUENCE_LEN}", self.max_len));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return fail(format!("val_fraction {} outside (0, 1)", self.val_fraction));
        }
        if self.dim == 0 || self.encoder_width == 0 || self.encoder_blocks == 0 {
            return fail("dim, encoder_width and encoder_blocks must be positive".into());
        }
        if let Some(p) = self.pad_to {
            if p < self.dim {
                return fail(format!("pad_to {p} is smaller than dim {}", self.dim));
            }
        }
        if self.steps == 0 {
            return fail("steps must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.p_uncond) {
            return fail(format!("p_uncond {} outside [0, 1)", self.p_uncond));
        }
        if self.diffusion_hidden == 0 || self.diffusion_blocks == 0 || self.chunk == 0 {
            return fail("diffusion_hidden, diffusion_blocks and chunk must be positive".into());
        }
        if !(self.beta >= 0.0 && self.lambda >= 0.0) {
            return fail(format!("beta {} and lambda {} must be >= 0", self.beta, self.lambda));
        }
        if self.n_critic == 0 {
            return fail("n_critic must be at least 1".into());
        }
        if let Some(t) = self.tau {
            if !(t > 0.0) {
                return fail(format!("tau {t} must be positive"));
            }
        }
        if self.noise == 0 || self.gan_hidden == 0 || self.channels == 0 {
            return fail("noise, gan_hidden and channels must be positive".into());
        }
        if let Some(w) = self.guidance {
            if !(w >= 0.0 && w.is_finite()) {
                return fail(format!("guidance {w} must be >= 0"));
            }
        }
        if self.kmer == 0 {
            return fail("kmer must be at least 1".into());
        }
        Ok(())
    }

    pub fn latent_width(&self) -> usize {
        self.pad_to.unwrap_or(self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.lr, 1e-5);
        assert_eq!(c.batch, 64);
        assert_eq!(c.beta, 175.0);
        assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let c = RunConfig::parse("# run\nlr = 4e-4\n\nguidance=1.5\ntau=none\n").unwrap();
        assert_eq!(c.lr, 4e-4);
        assert_eq!(c.guidance, Some(1.5));
        assert!(matches!(RunConfig::parse("learning_rate=1"), Err(Error::Parse { line: 1, .. })));
        assert!(RunConfig::parse("lr").is_err());
    }

    #[test]
    fn ranges_enforced() {
        for text in ["lr=0.01", "batch=48", "val_fraction=1", "pad_to=8", "p_uncond=1", "n_critic=0", "guidance=-1"] {
            let c = RunConfig::parse(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
    }
}
