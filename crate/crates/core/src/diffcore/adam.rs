use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};

use super::graph::Gradients;
use super::params::ParamStore;
use super::tensor::Tensor;
use crate::math;
use crate::{Error, Result};

/// Adam with bias correction.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    moments: BTreeMap<String, (Tensor, Tensor)>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            moments: BTreeMap::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// First and second moment estimates for a parameter, once it has been
    /// updated at least once.
    pub fn moments(&self, name: &str) -> Option<(&Tensor, &Tensor)> {
        self.moments.get(name).map(|(m, v)| (m, v))
    }

    /// Applies one update to every tensor in `params` (descent direction).
    pub fn step(&mut self, params: &mut ParamStore, grads: &Gradients) -> Result<()> {
        for (name, p) in params.iter() {
            let g = grads.get(name).ok_or_else(|| Error::MissingGradient(name.to_string()))?;
            if g.shape() != p.shape() {
                return Err(Error::InvalidTensor(alloc::format!(
                    "gradient for `{name}` has shape {:?}, parameter has {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - math::powi(self.beta1, t);
        let c2 = 1.0 - math::powi(self.beta2, t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.learning_rate);
        for (name, p) in params.iter_mut() {
            let g = grads.get(name).expect("checked above");
            let (m, v) = self
                .moments
                .entry(name.to_string())
                .or_insert_with(|| (Tensor::zeros(p.shape()), Tensor::zeros(p.shape())));
            let pd = p.data_mut();
            for (((w, &gi), mi), vi) in pd.iter_mut().zip(g.data()).zip(m.data_mut()).zip(v.data_mut()) {
                *mi = b1 * *mi + (1.0 - b1) * gi;
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *w -= lr * mhat / (math::sqrt(vhat) + eps);
            }
        }
        Ok(())
    }
}
