use super::schedule::NoiseSchedule;
use super::train::LatentDiffusion;
use crate::error::{Error, Result};
use crate::numerics::{gaussian, seeded, SeededRng, Tensor};
use crate::seqdata::LabelVector;

/// Runs ancestral sampling for one batch.
///
/// `predict(r_t, t, conditional)` returns the clean-latent prediction with the
/// condition kept (`true`) or dropped (`false`). With `guidance = None` only the
/// conditional prediction is used; otherwise `(1 + w) cond - w uncond`.
/// Each row draws from its own generator, so rows are reproducible on their own.
pub fn reverse_process(
    schedule: &NoiseSchedule,
    width: usize,
    rngs: &mut [SeededRng],
    guidance: Option<f64>,
    mut predict: impl FnMut(&Tensor<f32>, usize, bool) -> Result<Tensor<f32>>,
) -> Result<Tensor<f32>> {
    if let Some(w) = guidance {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Config(format!("guidance weight {w} must be finite and >= 0")));
        }
    }
    let b = rngs.len();
    let mut data = Vec::with_capacity(b * width);
    for rng in rngs.iter_mut() {
        data.extend(gaussian::<f32>(&[width], rng).into_vec());
    }
    let mut r = Tensor::new(vec![b, width], data)?;
    for t in (1..=schedule.steps()).rev() {
        let cond = predict(&r, t, true)?;
        let r_hat = match guidance {
            None => cond,
            Some(w) => {
                let uncond = predict(&r, t, false)?;
                let (a, c) = ((1.0 + w) as f32, w as f32);
                cond.zip_map(&uncond, |x, u| a * x - c * u)
            }
        };
        let (c0, ct, var) = schedule.posterior(t)?;
        let sd = var.sqrt();
        let mut next = Vec::with_capacity(b * width);
        for (i, rng) in rngs.iter_mut().enumerate() {
            let noise = if t > 1 { Some(gaussian::<f64>(&[width], rng)) } else { None };
            for j in 0..width {
                let mean = c0 * r_hat.data()[i * width + j] as f64 + ct * r.data()[i * width + j] as f64;
                let v = match &noise {
                    Some(z) => mean + sd * z.data()[j],
                    None => mean,
                };
                next.push(v as f32);
            }
        }
        r = Tensor::new(vec![b, width], next).map_err(|_| Error::NonFinite(format!("reverse diffusion step {t}")))?;
    }
    Ok(r)
}

impl LatentDiffusion {
    /// Draws one representation per `(label, seed)` pair, in the model's raw width
    /// and original (unstandardised) coordinates.
    pub fn sample(&self, labels: &[LabelVector], seeds: &[u64], guidance: Option<f64>) -> Result<Tensor<f32>> {
        if labels.len() != seeds.len() {
            return Err(Error::shape("sample_representation", format!("{} labels, {} seeds", labels.len(), seeds.len())));
        }
        let d = self.vocab.len();
        if let Some(bad) = labels.iter().find(|y| y.len() != d) {
            return Err(Error::shape("sample_representation", format!("label width {} vs vocabulary {d}", bad.len())));
        }
        let b = labels.len();
        let m = self.width();
        if b == 0 {
            return Tensor::new(vec![0, m], Vec::new());
        }
        let y = Tensor::from_fn(&[b, d], |i| if labels[i / d].get(i % d) { 1.0 } else { 0.0 });
        let mut rngs: Vec<SeededRng> = seeds.iter().map(|&s| seeded(s)).collect();
        let z = reverse_process(&self.schedule, m, &mut rngs, guidance, |r_t, t, cond| {
            self.model.predict(r_t, &vec![t; b], &y, &vec![!cond; b])
        })?;
        let out = Tensor::from_fn(&[b, m], |i| z.data()[i] * self.scale[i % m] + self.shift[i % m]);
        Ok(out)
    }
}

/// One representation for label `y` with guidance weight `w`.
pub fn sample_representation(model: &LatentDiffusion, y: &LabelVector, w: f64, seed: u64) -> Result<Vec<f32>> {
    Ok(model.sample(std::slice::from_ref(y), &[seed], Some(w))?.into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latentdiff::{make_schedule, ScheduleKind};

    #[test]
    fn constant_predictor_converges_to_constant() {
        let s = make_schedule(100, ScheduleKind::Linear).unwrap();
        let c = [0.5f32, -1.25, 3.0];
        let mut rngs = vec![seeded(1), seeded(2)];
        let out = reverse_process(&s, 3, &mut rngs, Some(1.5), |r, _, _| {
            Ok(Tensor::from_fn(r.shape(), |i| c[i % 3]))
        })
        .unwrap();
        for row in 0..2 {
            for j in 0..3 {
                assert!((out.row(row)[j] - c[j]).abs() < 1e-5, "{:?}", out.row(row));
            }
        }
    }

    #[test]
    fn equal_cond_and_uncond_make_guidance_irrelevant() {
        let s = make_schedule(30, ScheduleKind::Cosine).unwrap();
        let run = |w| {
            let mut rngs = vec![seeded(7)];
            reverse_process(&s, 4, &mut rngs, w, |r, t, _| Ok(r.map(|v| v * 0.5 + t as f32 * 1e-3))).unwrap()
        };
        let base = run(None);
        for w in [0.0, 0.5, 2.0] {
            assert!(run(Some(w)).max_abs_diff(&base) < 1e-5);
        }
    }

    #[test]
    fn zero_guidance_matches_conditional_exactly() {
        let s = make_schedule(40, ScheduleKind::Linear).unwrap();
        let pred = |r: &Tensor<f32>, t: usize, cond: bool| {
            let k = if cond { 0.7 } else { -0.3 };
            Ok(r.map(|v| (v * k + t as f32 * 0.01).tanh()))
        };
        let a = reverse_process(&s, 5, &mut [seeded(3), seeded(4)], Some(0.0), pred).unwrap();
        let b = reverse_process(&s, 5, &mut [seeded(3), seeded(4)], None, pred).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_negative_guidance() {
        let s = make_schedule(3, ScheduleKind::Linear).unwrap();
        assert!(reverse_process(&s, 2, &mut [seeded(0)], Some(-1.0), |r, _, _| Ok(r.clone())).is_err());
    }
}
