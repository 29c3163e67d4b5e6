use serde::{Deserialize, Serialize};

use super::{AgentParams, Gradients};
use crate::error::{CollageError, Result};

/// Adam with decoupled weight decay and global-norm gradient clipping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub max_grad_norm: f64,
    pub step: u64,
    #[serde(skip)]
    pub m: Vec<f64>,
    #[serde(skip)]
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Norm before clipping.
    pub grad_norm: f64,
    pub clipped: bool,
}

impl Adam {
    pub fn new(num_params: usize, lr: f64, weight_decay: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            max_grad_norm: 0.5,
            step: 0,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
        }
    }

    /// Scales `grads` in place so its norm is at most `max_grad_norm`.
    pub fn clip(&self, grads: &mut Gradients) -> UpdateStats {
        let norm = grads.norm();
        let clipped = norm > self.max_grad_norm;
        if clipped {
            let f = self.max_grad_norm / norm;
            grads.0.iter_mut().for_each(|g| *g *= f);
        }
        UpdateStats { grad_norm: norm, clipped }
    }

    /// Clips and applies one update. A non-finite gradient leaves the
    /// parameters and moments untouched and is reported as an error.
    pub fn update(&mut self, params: &mut AgentParams, grads: &mut Gradients) -> Result<UpdateStats> {
        if grads.0.len() != params.len() || self.m.len() != params.len() {
            return Err(CollageError::invalid_input("gradient, moment and parameter sizes differ"));
        }
        if grads.0.iter().any(|g| !g.is_finite()) {
            return Err(CollageError::Numeric("non-finite gradient; update skipped".into()));
        }
        let stats = self.clip(grads);
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((w, g), m), v) in params.values.iter_mut().zip(&grads.0).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *w -= self.lr * (m_hat / (v_hat.sqrt() + self.eps) + self.weight_decay * *w);
        }
        Ok(stats)
    }
}
