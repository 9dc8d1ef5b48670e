use super::tensor::{Real, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// Encoder and denoiser setting.
    pub const STANDARD: AdamConfig = AdamConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8 };
    /// Setting used for the adversarial networks.
    pub const ADVERSARIAL: AdamConfig = AdamConfig { beta1: 0.0, beta2: 0.9, eps: 1e-8 };
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Adam moments for an ordered list of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    pub first: Vec<Tensor<F>>,
    pub second: Vec<Tensor<F>>,
    pub step: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(config: AdamConfig, params: &[Tensor<F>]) -> Self {
        AdamState {
            config,
            first: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            second: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }

    /// One bias-corrected Adam update.
    ///
    /// A parameter whose gradient is identically zero keeps both its value
    /// and its moments, so a zero gradient never moves a parameter.
    pub fn step(&mut self, params: &mut [Tensor<F>], grads: &[Tensor<F>], lr: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first.len() {
            return Err(Error::shape(
                "adam_step",
                format!("{} params, {} grads, {} moment slots", params.len(), grads.len(), self.first.len()),
            ));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.first[i].shape() {
                return Err(Error::shape(
                    "adam_step",
                    format!("param {i}: {:?} vs grad {:?}", p.shape(), g.shape()),
                ));
            }
        }
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let t = self.step as i32;
        let c1 = F::lit(1.0 - beta1.powi(t));
        let c2 = F::lit(1.0 - beta2.powi(t));
        let (b1, b2, eps, lr) = (F::lit(beta1), F::lit(beta2), F::lit(eps), F::lit(lr));
        let one = F::one();
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if g.data().iter().all(|&x| x == F::zero()) {
                continue;
            }
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            for (((pv, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mv = b1 * *mv + (one - b1) * gv;
                *vv = b2 * *vv + (one - b2) * gv * gv;
                let mhat = *mv / c1;
                let vhat = *vv / c2;
                *pv -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_global_norm<F: Real>(grads: &mut [Tensor<F>], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.sq_norm().as_f64()).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = F::lit(max_norm / norm);
        for g in grads.iter_mut() {
            for v in g.data_mut() {
                *v *= s;
            }
        }
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_fresh_state_is_identity() {
        let mut p = vec![Tensor::<f64>::new(vec![2], vec![0.3, -1.2]).unwrap()];
        let before = p.clone();
        let mut st = AdamState::new(AdamConfig::STANDARD, &p);
        st.step(&mut p, &[Tensor::zeros(&[2])], 0.1).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![Tensor::<f64>::scalar(1.0)];
        let mut st = AdamState::new(AdamConfig::STANDARD, &p);
        st.step(&mut p, &[Tensor::scalar(1.0)], 0.1).unwrap();
        // m̂ = 1, v̂ = 1 after bias correction.
        let want = 1.0 - 0.1 / (1.0 + 1e-8);
        assert!((p[0].item() - want).abs() < 1e-15);
        assert!((p[0].item() - 0.9).abs() < 1e-8);
    }

    #[test]
    fn replay_from_saved_state_matches() {
        let g1 = Tensor::<f64>::new(vec![3], vec![0.5, -0.1, 2.0]).unwrap();
        let g2 = Tensor::<f64>::new(vec![3], vec![-0.3, 0.4, 1.0]).unwrap();
        let init = vec![Tensor::<f64>::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap()];

        let mut p = init.clone();
        let mut st = AdamState::new(AdamConfig::STANDARD, &p);
        st.step(&mut p, &[g1.clone()], 0.01).unwrap();
        let (saved_p, saved_st) = (p.clone(), st.clone());
        st.step(&mut p, &[g2.clone()], 0.01).unwrap();

        let mut q = saved_p;
        let mut st2 = saved_st;
        st2.step(&mut q, &[g2], 0.01).unwrap();
        assert_eq!(p, q);
        assert_eq!(st, st2);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut p = vec![Tensor::<f32>::zeros(&[2])];
        let mut st = AdamState::new(AdamConfig::STANDARD, &p);
        assert!(st.step(&mut p, &[Tensor::zeros(&[3])], 0.1).is_err());
    }

    #[test]
    fn clipping_caps_norm() {
        let mut g = vec![Tensor::<f64>::new(vec![2], vec![3.0, 4.0]).unwrap()];
        let n = clip_global_norm(&mut g, 1.0);
        assert_eq!(n, 5.0);
        assert!((g[0].sq_norm().sqrt() - 1.0).abs() < 1e-12);
    }
}
