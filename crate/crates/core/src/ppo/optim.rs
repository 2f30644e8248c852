//! Adam with global gradient-norm clipping.

use serde::{Deserialize, Serialize};

use super::nn::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(len: usize) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One step. With `lr == 0` the parameters are left bitwise unchanged.
    pub fn step<R: Real>(&mut self, params: &mut [R], grads: &[R], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "optimizer built for another network");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let c2 = 1.0 - self.beta2.powi(self.t.min(i32::MAX as u64) as i32);
        for i in 0..params.len() {
            let g = grads[i].as_f64();
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            if lr == 0.0 {
                continue;
            }
            let delta = lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
            params[i] = R::of(params[i].as_f64() - delta);
        }
    }
}

pub fn grad_norm<R: Real>(grads: &[R]) -> f64 {
    grads.iter().map(|g| g.as_f64().powi(2)).sum::<f64>().sqrt()
}

/// Rescales `grads` so their L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm<R: Real>(grads: &mut [R], max_norm: f64) -> f64 {
    let norm = grad_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let s = R::of(max_norm / norm);
        for g in grads.iter_mut() {
            *g = *g * s;
        }
    }
    norm
}
