//! Adam with decoupled weight decay and a step learning-rate schedule.

use crate::encoder::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrDecay {
    pub factor: f64,
    pub every_n_epochs: usize,
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub lr_decay: Option<LrDecay>,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64, weight_decay: f64) -> Result<Adam> {
        if !(lr > 0.0) || !(weight_decay >= 0.0) {
            return Err(Error::InvalidArgument(format!("need lr > 0 and weight_decay >= 0 (lr={lr}, wd={weight_decay})")));
        }
        Ok(Adam { lr, weight_decay, beta1: 0.9, beta2: 0.999, eps: 1e-8, lr_decay: None, t: 0, m: vec![], v: vec![] })
    }

    pub fn with_lr_decay(mut self, decay: Option<LrDecay>) -> Result<Adam> {
        if let Some(d) = decay {
            if !(d.factor > 0.0) || d.every_n_epochs == 0 {
                return Err(Error::InvalidArgument(format!("bad lr decay {d:?}")));
            }
        }
        self.lr_decay = decay;
        Ok(self)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update in place. Rejects non-finite gradients before
    /// touching any parameter.
    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) -> Result<()> {
        let grad_tensors = grads.tensors();
        let mut param_tensors = params.tensors_mut();
        if grad_tensors.len() != param_tensors.len() {
            return Err(Error::shape("adam_step", "parameter and gradient layouts differ"));
        }
        for ((name, p), (_, g)) in param_tensors.iter().zip(&grad_tensors) {
            if p.len() != g.len() {
                return Err(Error::shape("adam_step", format!("{name}: {} params vs {} grads", p.len(), g.len())));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("gradient of {name}")));
            }
        }
        if self.m.is_empty() {
            self.m = grad_tensors.iter().map(|(_, g)| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (ti, ((_, p), (_, g))) in param_tensors.iter_mut().zip(&grad_tensors).enumerate() {
            let (m, v) = (&mut self.m[ti], &mut self.v[ti]);
            for k in 0..p.len() {
                m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g[k];
                v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g[k] * g[k];
                p[k] -= self.lr * self.weight_decay * p[k];
                let m_hat = m[k] / bc1;
                let v_hat = v[k] / bc2;
                p[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }

    /// Multiplies the learning rate by the decay factor at epochs
    /// `every+1, 2·every+1, ...` when a schedule is configured.
    pub fn maybe_decay_lr(&mut self, epoch: usize) {
        if let Some(d) = self.lr_decay {
            if epoch > 1 && (epoch - 1) % d.every_n_epochs == 0 {
                self.lr *= d.factor;
            }
        }
    }
}
