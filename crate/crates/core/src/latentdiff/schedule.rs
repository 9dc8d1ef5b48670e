use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{Real, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleKind::Linear => "linear",
            ScheduleKind::Cosine => "cosine",
        })
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScheduleKind::Linear),
            "cosine" => Ok(ScheduleKind::Cosine),
            _ => Err(Error::Config(format!("unknown schedule `{s}` (linear|cosine)"))),
        }
    }
}

/// Per-step coefficients; index `t - 1` holds step `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    pub kind: ScheduleKind,
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_bar: Vec<f64>,
}

const BETA_START: f64 = 1e-4;
const BETA_END: f64 = 0.02;
const MAX_BETA: f64 = 0.999;

/// Builds a `T`-step schedule.
///
/// The linear ramp runs from 1e-4 to 0.02 at `T = 1000` and is rescaled by
/// `1000 / T` for shorter chains so the total noise stays comparable.
pub fn make_schedule(steps: usize, kind: ScheduleKind) -> Result<NoiseSchedule> {
    if steps == 0 {
        return Err(Error::Config("diffusion needs at least one step".into()));
    }
    let t_max = steps as f64;
    let beta: Vec<f64> = match kind {
        ScheduleKind::Linear => {
            let scale = 1000.0 / t_max;
            (0..steps)
                .map(|i| {
                    let frac = if steps == 1 { 0.0 } else { i as f64 / (t_max - 1.0) };
                    ((BETA_START + (BETA_END - BETA_START) * frac) * scale).min(MAX_BETA)
                })
                .collect()
        }
        ScheduleKind::Cosine => {
            let s = 0.008;
            let f = |t: f64| ((t / t_max + s) / (1.0 + s) * std::f64::consts::FRAC_PI_2).cos().powi(2);
            (1..=steps)
                .map(|t| (1.0 - f(t as f64) / f(t as f64 - 1.0)).clamp(1e-8, MAX_BETA))
                .collect()
        }
    };
    let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
    let alpha_bar = alpha
        .iter()
        .scan(1.0, |acc, a| {
            *acc *= a;
            Some(*acc)
        })
        .collect();
    Ok(NoiseSchedule { kind, beta, alpha, alpha_bar })
}

impl NoiseSchedule {
    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    fn check(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::Contract(format!("step {t} outside 1..={}", self.steps())));
        }
        Ok(())
    }

    /// ᾱ_t, with ᾱ_0 = 1.
    pub fn alpha_bar_at(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    /// Coefficients `(c0, ct, var)` of the posterior q(r_{t-1} | r_t, r_0):
    /// mean `c0 r_0 + ct r_t`, variance `var` (zero at t = 1).
    pub fn posterior(&self, t: usize) -> Result<(f64, f64, f64)> {
        self.check(t)?;
        let ab = self.alpha_bar_at(t);
        let ab_prev = self.alpha_bar_at(t - 1);
        let beta = self.beta[t - 1];
        let c0 = ab_prev.sqrt() * beta / (1.0 - ab);
        let ct = self.alpha[t - 1].sqrt() * (1.0 - ab_prev) / (1.0 - ab);
        let var = if t == 1 { 0.0 } else { (1.0 - ab_prev) / (1.0 - ab) * beta };
        Ok((c0, ct, var))
    }
}

/// `r_t = sqrt(ᾱ_t) r + sqrt(1 - ᾱ_t) ε`.
pub fn forward_diffuse<F: Real>(r: &Tensor<F>, t: usize, eps: &Tensor<F>, schedule: &NoiseSchedule) -> Result<Tensor<F>> {
    schedule.check(t)?;
    if r.shape() != eps.shape() {
        return Err(Error::shape("forward_diffuse", format!("r {:?} vs noise {:?}", r.shape(), eps.shape())));
    }
    let ab = schedule.alpha_bar[t - 1];
    let (a, s) = (F::lit(ab.sqrt()), F::lit((1.0 - ab).sqrt()));
    Ok(r.zip_map(eps, |x, e| a * x + s * e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_linear_schedule_reaches_noise() {
        let s = make_schedule(1000, ScheduleKind::Linear).unwrap();
        assert!((s.beta[0] - 1e-4).abs() < 1e-15);
        assert!((s.beta[999] - 0.02).abs() < 1e-15);
        let direct: f64 = s.beta.iter().map(|b| 1.0 - b).product();
        assert!((s.alpha_bar[999] - direct).abs() < 1e-15);
        assert!(direct < 0.01);
    }

    #[test]
    fn alpha_bar_strictly_decreasing() {
        for kind in [ScheduleKind::Linear, ScheduleKind::Cosine] {
            for t in [2, 10, 100, 1000] {
                let s = make_schedule(t, kind).unwrap();
                assert!(s.alpha_bar.windows(2).all(|w| w[1] < w[0]), "{kind} T={t}");
                assert!(s.beta.iter().all(|&b| b > 0.0 && b < 1.0));
            }
            let s = make_schedule(100, kind).unwrap();
            assert!(s.alpha_bar[0] > 0.98 && s.alpha_bar[99] < 0.01, "{kind}: {:?}", (s.alpha_bar[0], s.alpha_bar[99]));
        }
    }

    #[test]
    fn single_step_and_zero_steps() {
        let s = make_schedule(1, ScheduleKind::Linear).unwrap();
        assert_eq!(s.alpha_bar[0], s.alpha[0]);
        assert!(make_schedule(0, ScheduleKind::Cosine).is_err());
    }

    #[test]
    fn forward_diffuse_limits() {
        let r = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        let e = Tensor::new(vec![3], vec![0.3, 0.1, -0.7]).unwrap();
        let mut s = make_schedule(2, ScheduleKind::Linear).unwrap();
        s.alpha_bar = vec![1.0, 0.0];
        assert_eq!(forward_diffuse(&r, 1, &e, &s).unwrap(), r);
        assert_eq!(forward_diffuse(&r, 2, &e, &s).unwrap(), e);
        assert!(forward_diffuse(&r, 3, &e, &s).is_err());
    }

    #[test]
    fn last_posterior_step_returns_prediction() {
        let s = make_schedule(100, ScheduleKind::Linear).unwrap();
        let (c0, ct, var) = s.posterior(1).unwrap();
        assert!((c0 - 1.0).abs() < 1e-12 && ct == 0.0 && var == 0.0);
    }
}
