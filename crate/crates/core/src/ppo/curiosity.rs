//! Forward-model curiosity bonus. Observations are embedded by a fixed
//! random projection; a trained model predicts the next embedding from the
//! current one and the action, and its squared error is the bonus.
//! Only the vector observation is embedded.

use rand::Rng;

use super::config::CuriosityConfig;
use super::nn::{backward_seq, forward_seq, Layer};
use super::optim::{clip_grad_norm, Adam};
use super::config::MAX_GRAD_NORM;
use crate::sim::AgentAction;

#[derive(Debug, Clone)]
pub struct Curiosity {
    pub config: CuriosityConfig,
    encoder: Vec<Layer>,
    encoder_params: Vec<f32>,
    model: Vec<Layer>,
    pub params: Vec<f32>,
    optim: Adam,
    branches: Vec<usize>,
    continuous: usize,
}

impl Curiosity {
    pub fn new(config: CuriosityConfig, obs_len: usize, branches: &[usize], continuous: usize, rng: &mut impl Rng) -> Self {
        let e = config.encoding_size;
        let mut ep = Vec::new();
        let encoder = vec![Layer::dense(&mut ep, obs_len, e, 1.0, rng), Layer::Tanh { len: e }];
        let action_len = branches.iter().sum::<usize>() + continuous;
        let mut p = Vec::new();
        let model = vec![
            Layer::dense(&mut p, e + action_len, e, 1.0, rng),
            Layer::Tanh { len: e },
            Layer::dense(&mut p, e, e, 1.0, rng),
        ];
        Self {
            config,
            encoder,
            encoder_params: ep.into_iter().map(|v| v as f32).collect(),
            model,
            optim: Adam::new(p.len()),
            params: p.into_iter().map(|v| v as f32).collect(),
            branches: branches.to_vec(),
            continuous,
        }
    }

    fn encode(&self, obs: &[f32], n: usize) -> Vec<f32> {
        forward_seq(&self.encoder, &self.encoder_params, obs.to_vec(), n).0
    }

    fn model_input(&self, phi: &[f32], actions: &[AgentAction], n: usize) -> Vec<f32> {
        let e = self.config.encoding_size;
        let mut x = Vec::new();
        for i in 0..n {
            x.extend_from_slice(&phi[i * e..(i + 1) * e]);
            for (b, &size) in self.branches.iter().enumerate() {
                x.extend((0..size).map(|j| if j == actions[i].discrete[b] { 1.0 } else { 0.0 }));
            }
            x.extend(actions[i].continuous.iter().take(self.continuous).map(|&v| v as f32));
        }
        x
    }

    /// Per-sample prediction error (mean squared over the embedding) and,
    /// when asked, the model gradient of its batch mean.
    fn errors(&self, obs: &[f32], actions: &[AgentAction], next: &[f32], want_grad: bool) -> (Vec<f64>, Option<Vec<f32>>) {
        let n = actions.len();
        let e = self.config.encoding_size;
        let phi = self.encode(obs, n);
        let target = self.encode(next, n);
        let (pred, caches) = forward_seq(&self.model, &self.params, self.model_input(&phi, actions, n), n);
        let mut errs = vec![0.0; n];
        let mut dy = vec![0.0f32; n * e];
        for i in 0..n {
            for k in 0..e {
                let d = (pred[i * e + k] - target[i * e + k]) as f64;
                errs[i] += d * d / e as f64;
                dy[i * e + k] = (2.0 * d / (e * n) as f64) as f32;
            }
        }
        if !want_grad {
            return (errs, None);
        }
        let mut grads = vec![0.0f32; self.params.len()];
        backward_seq(&self.model, &self.params, &caches, dy, n, &mut grads, false);
        (errs, Some(grads))
    }

    /// Intrinsic reward `strength · error` for each transition.
    pub fn bonus(&self, obs: &[f32], actions: &[AgentAction], next: &[f32]) -> Vec<f64> {
        self.errors(obs, actions, next, false)
            .0
            .into_iter()
            .map(|e| self.config.strength * e)
            .collect()
    }

    /// One gradient step on a minibatch; returns the mean error before it.
    pub fn train(&mut self, obs: &[f32], actions: &[AgentAction], next: &[f32], lr: f64) -> f64 {
        let (errs, grads) = self.errors(obs, actions, next, true);
        let mut grads = grads.expect("gradient requested");
        clip_grad_norm(&mut grads, MAX_GRAD_NORM);
        self.optim.step(&mut self.params, &grads, lr);
        errs.iter().sum::<f64>() / errs.len().max(1) as f64
    }
}
