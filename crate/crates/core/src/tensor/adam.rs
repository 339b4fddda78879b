use super::{ParamStore, Real};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Bias-corrected Adam with per-parameter first/second moment buffers.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new(config: AdamConfig, params: &ParamStore<T>) -> Self {
        let zeros = |_: (&str, &super::Tensor<T>)| Vec::new();
        Adam {
            config,
            step: 0,
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, i: usize) -> &[T] {
        &self.m[i]
    }

    pub fn second_moment(&self, i: usize) -> &[T] {
        &self.v[i]
    }

    /// Applies one update from `grads` (one buffer per parameter, store order).
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &[Vec<T>]) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::shape(
                "adam_step",
                format!("{} gradients for {} parameters", grads.len(), params.len()),
            ));
        }
        for ((p, g), m) in params.tensors_mut().zip(grads).zip(&self.m) {
            if g.len() != p.numel() || !(m.is_empty() || m.len() == p.numel()) {
                return Err(Error::shape("adam_step", format!("gradient of {} for parameter of {}", g.len(), p.numel())));
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bias1 = 1.0 - c.beta1.powi(t);
        let bias2 = 1.0 - c.beta2.powi(t);
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (one_b1, one_b2) = (T::lit(1.0 - c.beta1), T::lit(1.0 - c.beta2));
        let (bc1, bc2) = (T::lit(bias1), T::lit(bias2));
        let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));

        for (((p, g), m), v) in params.tensors_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            if m.is_empty() {
                *m = vec![T::zero(); g.len()];
                *v = vec![T::zero(); g.len()];
            }
            for (((w, &gi), mi), vi) in p.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = b1 * *mi + one_b1 * gi;
                *vi = b2 * *vi + one_b2 * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    fn store(v: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("p", Tensor::full([1], v)).unwrap();
        s
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut s = store(0.7);
        let mut opt = Adam::new(AdamConfig::default(), &s);
        opt.step(&mut s, &[vec![0.0]]).unwrap();
        assert_eq!(s.get(s.find("p").unwrap()).data(), &[0.7]);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        for g in [3.0, -0.02, 1e-3] {
            let mut s = store(1.0);
            let mut opt = Adam::new(AdamConfig::default(), &s);
            opt.step(&mut s, &[vec![g]]).unwrap();
            let delta = s.get(s.find("p").unwrap()).data()[0] - 1.0;
            // m_hat = g, v_hat = g^2  =>  delta = -lr * g / (|g| + eps)
            let oracle = -1e-3 * g / (g.abs() + 1e-8);
            assert!((delta - oracle).abs() < 1e-15, "g={g}: {delta} vs {oracle}");
            assert!((delta + 1e-3 * g.signum()).abs() < 1e-7);
        }
    }

    #[test]
    fn second_constant_step_is_not_larger() {
        let mut s = store(0.0);
        let mut opt = Adam::new(AdamConfig::default(), &s);
        opt.step(&mut s, &[vec![0.5]]).unwrap();
        let d1 = s.get(s.find("p").unwrap()).data()[0].abs();
        opt.step(&mut s, &[vec![0.5]]).unwrap();
        let d2 = (s.get(s.find("p").unwrap()).data()[0].abs() - d1).abs();
        assert!(d2 <= d1 * (1.0 + 1e-6));
        assert!(opt.second_moment(0).iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn zero_learning_rate_is_bit_identical() {
        let mut s = store(0.123456789);
        let before = s.clone();
        let mut opt = Adam::new(AdamConfig { lr: 0.0, ..Default::default() }, &s);
        for _ in 0..5 {
            opt.step(&mut s, &[vec![0.9]]).unwrap();
        }
        assert_eq!(s, before);
    }

    #[test]
    fn mismatched_gradients_are_rejected() {
        let mut s = store(0.0);
        let mut opt = Adam::new(AdamConfig::default(), &s);
        assert!(opt.step(&mut s, &[vec![0.0, 1.0]]).is_err());
        assert!(opt.step(&mut s, &[]).is_err());
        assert_eq!(opt.steps(), 0);
    }
}
