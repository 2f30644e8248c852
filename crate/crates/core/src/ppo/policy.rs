//! Actor-critic network: optional shared visual encoder, separate dense
//! bodies for the actor and the critic, action and value heads. One
//! instance serves every agent of an environment.
//!
//! The critic predicts returns in normalized units; [`ValueNorm`] maps
//! them back.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{TrainerConfig, VisEncodeType};
use super::dist::{clamp_log_std, gaussian_entropy, gaussian_log_prob, log_softmax, sample_categorical};
use super::nn::{backward_seq, forward_seq, Cache, ConvGeom, Layer, Real};
use super::objective::{is_clipped, ppo_clip_grad, ppo_clip_objective};
use crate::sim::{AgentAction, SpaceSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub stacks: usize,
}

impl VisualShape {
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels * self.stacks
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArch {
    pub vector_len: usize,
    pub visual: Option<VisualShape>,
    pub hidden_units: usize,
    pub num_layers: usize,
    pub encoder: VisEncodeType,
    pub branches: Vec<usize>,
    pub continuous: usize,
}

impl PolicyArch {
    pub fn new(spec: &SpaceSpec, config: &TrainerConfig) -> Self {
        Self {
            vector_len: spec.vector_total(),
            visual: spec.visual_dims.map(|(w, h, c)| VisualShape {
                height: h,
                width: w,
                channels: c,
                stacks: spec.visual_stacks,
            }),
            hidden_units: config.hidden_units,
            num_layers: config.num_layers,
            encoder: config.vis_encode_type,
            branches: spec.discrete_branches.clone(),
            continuous: spec.continuous_actions,
        }
    }

    pub fn logit_count(&self) -> usize {
        self.branches.iter().sum()
    }
}

/// Observations of `n` agents. Visual data is channels-last with stacked
/// frames folded into the channel axis (see [`interleave_stacks`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ObsBatch<R> {
    pub n: usize,
    pub vector: Vec<R>,
    pub visual: Vec<R>,
}

/// Converts `[frame 0 | frame 1 | …]` (each `h×w×c`) to one `h×w×(c·stacks)`
/// image with frame `s` at channels `s·c..(s+1)·c`.
pub fn interleave_stacks<R: Real>(stacked: &[f32], shape: &VisualShape, out: &mut Vec<R>) {
    let pixels = shape.height * shape.width;
    let frame = pixels * shape.channels;
    if shape.stacks == 1 {
        out.extend(stacked.iter().map(|&v| R::of(v as f64)));
        return;
    }
    for p in 0..pixels {
        for s in 0..shape.stacks {
            let base = s * frame + p * shape.channels;
            out.extend(stacked[base..base + shape.channels].iter().map(|&v| R::of(v as f64)));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiniBatch<R> {
    pub obs: ObsBatch<R>,
    /// `n × branches` chosen indices.
    pub discrete: Vec<usize>,
    /// `n × continuous` raw (unclamped) sampled actions.
    pub continuous: Vec<R>,
    pub old_log_prob: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoef {
    pub epsilon: f64,
    pub beta: f64,
    pub value_coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub total: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// One sampled decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub action: AgentAction,
    /// Raw Gaussian draws before the environment clamps them.
    pub raw_continuous: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

/// Affine map from critic output to return units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueNorm {
    pub mean: f64,
    pub std: f64,
}

impl Default for ValueNorm {
    fn default() -> Self {
        Self { mean: 0.0, std: 1.0 }
    }
}

pub struct Forward<R> {
    pub n: usize,
    pub logits: Vec<R>,
    pub mean: Vec<R>,
    pub log_std: Vec<R>,
    /// Critic output in normalized units.
    pub value: Vec<R>,
    visual_cache: Vec<Cache<R>>,
    actor_cache: Vec<Cache<R>>,
    critic_cache: Vec<Cache<R>>,
    logits_cache: Option<Cache<R>>,
    mean_cache: Option<Cache<R>>,
    value_cache: Cache<R>,
}

#[derive(Debug, Clone)]
pub struct Policy<R: Real> {
    pub arch: PolicyArch,
    pub params: Vec<R>,
    visual_net: Vec<Layer>,
    visual_feat: usize,
    actor_body: Vec<Layer>,
    critic_body: Vec<Layer>,
    logits: Option<Layer>,
    mean: Option<Layer>,
    log_std: usize,
    value: Layer,
    pub value_norm: ValueNorm,
}

fn visual_encoder(shape: &VisualShape, kind: VisEncodeType, hidden: usize, p: &mut Vec<f64>, rng: &mut impl Rng) -> Vec<Layer> {
    let c = shape.channels * shape.stacks;
    let mut layers = Vec::new();
    match kind {
        VisEncodeType::Simple => {
            let g1 = ConvGeom::new(shape.height, shape.width, c, 8, 4, 0, 16);
            let g2 = ConvGeom::new(g1.out_h, g1.out_w, 16, 4, 2, 0, 32);
            layers.push(Layer::conv(p, g1, rng));
            layers.push(Layer::Relu { len: g1.out_h * g1.out_w * 16 });
            layers.push(Layer::conv(p, g2, rng));
            layers.push(Layer::Relu { len: g2.out_h * g2.out_w * 32 });
        }
        VisEncodeType::Resnet => {
            let (mut h, mut w, mut ch) = (shape.height, shape.width, c);
            for width in [16, 32] {
                let g = ConvGeom::new(h, w, ch, 3, 1, 1, width);
                layers.push(Layer::conv(p, g, rng));
                let pool = Layer::max_pool(g.out_h, g.out_w, width, 2, 2);
                let len = pool.out_len();
                if let Layer::MaxPool { out_h, out_w, .. } = pool {
                    (h, w) = (out_h, out_w);
                }
                layers.push(pool);
                ch = width;
                let inner = ConvGeom::new(h, w, ch, 3, 1, 1, ch);
                layers.push(Layer::Residual(vec![
                    Layer::Relu { len },
                    Layer::conv(p, inner, rng),
                    Layer::Relu { len },
                    Layer::conv(p, inner, rng),
                ]));
            }
            layers.push(Layer::Relu { len: h * w * ch });
        }
    }
    let flat = layers.last().map_or(0, |l| l.out_len());
    layers.push(Layer::dense(p, flat, hidden, 2f64.sqrt(), rng));
    layers.push(Layer::Relu { len: hidden });
    layers
}

fn add_into<R: Real>(acc: &mut [R], v: &[R]) {
    for (a, &b) in acc.iter_mut().zip(v) {
        *a = *a + b;
    }
}

impl<R: Real> Policy<R> {
    pub fn new(arch: PolicyArch, rng: &mut impl Rng) -> Self {
        let mut p = Vec::new();
        let h = arch.hidden_units;
        let visual_net = match &arch.visual {
            Some(shape) => visual_encoder(shape, arch.encoder, h, &mut p, rng),
            None => Vec::new(),
        };
        let visual_feat = if visual_net.is_empty() { 0 } else { h };
        let mut mlp = |p: &mut Vec<f64>| {
            let mut body = Vec::new();
            let mut input = arch.vector_len + visual_feat;
            for _ in 0..arch.num_layers {
                body.push(Layer::dense(p, input, h, 2f64.sqrt(), rng));
                body.push(Layer::Swish { len: h });
                input = h;
            }
            body
        };
        let actor_body = mlp(&mut p);
        let critic_body = mlp(&mut p);
        let logits = (!arch.branches.is_empty()).then(|| Layer::dense(&mut p, h, arch.logit_count(), 0.1, rng));
        let mean = (arch.continuous > 0).then(|| Layer::dense(&mut p, h, arch.continuous, 0.1, rng));
        let log_std = p.len();
        p.resize(p.len() + arch.continuous, 0.0);
        let value = Layer::dense(&mut p, h, 1, 1.0, rng);
        Self {
            arch,
            params: p.into_iter().map(R::of).collect(),
            visual_net,
            visual_feat,
            actor_body,
            critic_body,
            logits,
            mean,
            log_std,
            value,
            value_norm: ValueNorm::default(),
        }
    }

    /// Same network with parameters converted to another scalar type.
    pub fn cast<S: Real>(&self) -> Policy<S> {
        Policy {
            arch: self.arch.clone(),
            params: self.params.iter().map(|&v| S::of(v.as_f64())).collect(),
            visual_net: self.visual_net.clone(),
            visual_feat: self.visual_feat,
            actor_body: self.actor_body.clone(),
            critic_body: self.critic_body.clone(),
            logits: self.logits.clone(),
            mean: self.mean.clone(),
            log_std: self.log_std,
            value: self.value.clone(),
            value_norm: self.value_norm,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Builds a batch from per-agent stacked observations.
    pub fn batch<'a>(&self, obs: impl IntoIterator<Item = (&'a [f32], Option<&'a [f32]>)>) -> ObsBatch<R> {
        let mut b = ObsBatch {
            n: 0,
            vector: Vec::new(),
            visual: Vec::new(),
        };
        for (vector, visual) in obs {
            b.n += 1;
            b.vector.extend(vector.iter().map(|&v| R::of(v as f64)));
            if let (Some(shape), Some(vis)) = (&self.arch.visual, visual) {
                interleave_stacks(vis, shape, &mut b.visual);
            }
        }
        b
    }

    pub fn forward(&self, obs: &ObsBatch<R>) -> Forward<R> {
        let n = obs.n;
        let (feat, visual_cache) = if self.visual_net.is_empty() {
            (Vec::new(), Vec::new())
        } else {
            forward_seq(&self.visual_net, &self.params, obs.visual.clone(), n)
        };
        let width = self.arch.vector_len + self.visual_feat;
        let mut input = Vec::with_capacity(n * width);
        for i in 0..n {
            input.extend_from_slice(&obs.vector[i * self.arch.vector_len..(i + 1) * self.arch.vector_len]);
            if self.visual_feat > 0 {
                input.extend_from_slice(&feat[i * self.visual_feat..(i + 1) * self.visual_feat]);
            }
        }
        let (hidden, actor_cache) = forward_seq(&self.actor_body, &self.params, input.clone(), n);
        let (critic_hidden, critic_cache) = forward_seq(&self.critic_body, &self.params, input, n);
        let (logits, logits_cache) = match &self.logits {
            Some(l) => {
                let (y, c) = l.forward(&self.params, hidden.clone(), n);
                (y, Some(c))
            }
            None => (Vec::new(), None),
        };
        let (mean, mean_cache) = match &self.mean {
            Some(l) => {
                let (y, c) = l.forward(&self.params, hidden, n);
                (y, Some(c))
            }
            None => (Vec::new(), None),
        };
        let log_std = self.params[self.log_std..self.log_std + self.arch.continuous]
            .iter()
            .map(|&v| clamp_log_std(v))
            .collect();
        let (value, value_cache) = self.value.forward(&self.params, critic_hidden, n);
        Forward {
            n,
            logits,
            mean,
            log_std,
            value,
            visual_cache,
            actor_cache,
            critic_cache,
            logits_cache,
            mean_cache,
            value_cache,
        }
    }

    fn denormalize(&self, v: R) -> f64 {
        v.as_f64() * self.value_norm.std + self.value_norm.mean
    }

    /// Value estimates in return units.
    pub fn values(&self, obs: &ObsBatch<R>) -> Vec<f64> {
        self.forward(obs).value.iter().map(|&v| self.denormalize(v)).collect()
    }

    /// Switches the return normalization while keeping every value
    /// estimate unchanged (the value head absorbs the change).
    pub fn set_value_norm(&mut self, norm: ValueNorm) {
        let old = self.value_norm;
        if let Layer::Dense { input, w, b, .. } = self.value {
            let ratio = old.std / norm.std;
            for v in &mut self.params[w..w + input] {
                *v = R::of(v.as_f64() * ratio);
            }
            let bias = self.params[b].as_f64();
            self.params[b] = R::of((old.std * bias + old.mean - norm.mean) / norm.std);
        }
        self.value_norm = norm;
    }

    /// Samples one action per agent.
    pub fn act(&self, obs: &ObsBatch<R>, rng: &mut impl Rng) -> Vec<Sampled> {
        let f = self.forward(obs);
        let lc = self.arch.logit_count();
        let c = self.arch.continuous;
        (0..f.n)
            .map(|i| {
                let mut log_prob = 0.0;
                let mut discrete = Vec::with_capacity(self.arch.branches.len());
                let mut off = i * lc;
                for &size in &self.arch.branches {
                    let ls = log_softmax(&f.logits[off..off + size]);
                    let probs: Vec<R> = ls.iter().map(|l| l.exp()).collect();
                    let a = sample_categorical(&probs, rng.random::<f64>());
                    log_prob += ls[a].as_f64();
                    discrete.push(a);
                    off += size;
                }
                let mut raw = Vec::with_capacity(c);
                for k in 0..c {
                    let mu = f.mean[i * c + k].as_f64();
                    let ls = f.log_std[k].as_f64();
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    let a = mu + ls.exp() * z;
                    log_prob += gaussian_log_prob(R::of(a), f.mean[i * c + k], f.log_std[k]).as_f64();
                    raw.push(a);
                }
                Sampled {
                    action: AgentAction {
                        discrete,
                        continuous: raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
                    },
                    raw_continuous: raw,
                    log_prob,
                    value: self.denormalize(f.value[i]),
                }
            })
            .collect()
    }

    /// PPO loss of a minibatch and, when `want_grad`, its gradient with
    /// respect to `params`.
    pub fn evaluate(&self, mb: &MiniBatch<R>, coef: &LossCoef, want_grad: bool) -> (LossStats, Option<Vec<R>>) {
        let f = self.forward(&mb.obs);
        let n = f.n;
        let nf = n as f64;
        let lc = self.arch.logit_count();
        let nb = self.arch.branches.len();
        let c = self.arch.continuous;
        let mut stats = LossStats::default();
        let mut dlogits = vec![R::zero(); n * lc];
        let mut dmean = vec![R::zero(); n * c];
        let mut dlog_std = vec![0.0; c];
        let mut dvalue = vec![R::zero(); n];
        let gauss_entropy: f64 = f.log_std.iter().map(|&l| gaussian_entropy(l).as_f64()).sum();
        for i in 0..n {
            let mut log_prob = 0.0;
            let mut entropy = gauss_entropy;
            let mut branch_ls = Vec::with_capacity(nb);
            let mut off = i * lc;
            for (b, &size) in self.arch.branches.iter().enumerate() {
                let ls = log_softmax(&f.logits[off..off + size]);
                log_prob += ls[mb.discrete[i * nb + b]].as_f64();
                let h: f64 = ls.iter().map(|l| -l.exp().as_f64() * l.as_f64()).sum();
                entropy += h;
                branch_ls.push((ls, h));
                off += size;
            }
            for k in 0..c {
                log_prob += gaussian_log_prob(mb.continuous[i * c + k], f.mean[i * c + k], f.log_std[k]).as_f64();
            }
            let adv = mb.advantages[i];
            let diff = log_prob - mb.old_log_prob[i];
            let ratio = diff.exp();
            let v = f.value[i].as_f64();
            let err = v - (mb.returns[i] - self.value_norm.mean) / self.value_norm.std;
            stats.policy_loss -= ppo_clip_objective(ratio, adv, coef.epsilon) / nf;
            stats.value_loss += err * err / nf;
            stats.entropy += entropy / nf;
            stats.approx_kl += ((ratio - 1.0) - diff) / nf;
            if is_clipped(ratio, adv, coef.epsilon) {
                stats.clip_fraction += 1.0 / nf;
            }
            if !want_grad {
                continue;
            }
            let g = -ppo_clip_grad(ratio, adv, coef.epsilon) * ratio / nf;
            let mut off = i * lc;
            for (b, (ls, h)) in branch_ls.iter().enumerate() {
                let chosen = mb.discrete[i * nb + b];
                for (j, l) in ls.iter().enumerate() {
                    let p = l.exp().as_f64();
                    let onehot = if j == chosen { 1.0 } else { 0.0 };
                    let d = g * (onehot - p) + coef.beta / nf * p * (l.as_f64() + h);
                    dlogits[off + j] = R::of(d);
                }
                off += ls.len();
            }
            for k in 0..c {
                let sigma = f.log_std[k].as_f64().exp();
                let z = (mb.continuous[i * c + k].as_f64() - f.mean[i * c + k].as_f64()) / sigma;
                dmean[i * c + k] = R::of(g * z / sigma);
                dlog_std[k] += g * (z * z - 1.0) - coef.beta / nf;
            }
            dvalue[i] = R::of(2.0 * coef.value_coef * err / nf);
        }
        stats.total = stats.policy_loss + coef.value_coef * stats.value_loss - coef.beta * stats.entropy;
        if !want_grad {
            return (stats, None);
        }
        let mut grads = vec![R::zero(); self.params.len()];
        let dh_critic = self
            .value
            .backward(&self.params, &f.value_cache, dvalue, n, &mut grads, true)
            .expect("dx requested");
        let mut dh = vec![R::zero(); n * self.arch.hidden_units];
        if let (Some(l), Some(cache)) = (&self.logits, &f.logits_cache) {
            let d = l.backward(&self.params, cache, dlogits, n, &mut grads, true).expect("dx requested");
            add_into(&mut dh, &d);
        }
        if let (Some(l), Some(cache)) = (&self.mean, &f.mean_cache) {
            let d = l.backward(&self.params, cache, dmean, n, &mut grads, true).expect("dx requested");
            add_into(&mut dh, &d);
        }
        for k in 0..c {
            let raw = self.params[self.log_std + k].as_f64();
            let inside = (super::dist::LOG_STD_MIN..=super::dist::LOG_STD_MAX).contains(&raw);
            grads[self.log_std + k] = R::of(if inside { dlog_std[k] } else { 0.0 });
        }
        let need_input = self.visual_feat > 0;
        let dinput = backward_seq(&self.actor_body, &self.params, &f.actor_cache, dh, n, &mut grads, need_input);
        let dcritic = backward_seq(&self.critic_body, &self.params, &f.critic_cache, dh_critic, n, &mut grads, need_input);
        if let (Some(mut dinput), Some(dcritic)) = (dinput, dcritic) {
            add_into(&mut dinput, &dcritic);
            let width = self.arch.vector_len + self.visual_feat;
            let mut dfeat = Vec::with_capacity(n * self.visual_feat);
            for i in 0..n {
                dfeat.extend_from_slice(&dinput[i * width + self.arch.vector_len..(i + 1) * width]);
            }
            backward_seq(&self.visual_net, &self.params, &f.visual_cache, dfeat, n, &mut grads, false);
        }
        (stats, Some(grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::EnvId;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interleave_two_frames() {
        let shape = VisualShape {
            height: 1,
            width: 2,
            channels: 1,
            stacks: 2,
        };
        let mut out: Vec<f32> = Vec::new();
        interleave_stacks(&[1.0, 2.0, 10.0, 20.0], &shape, &mut out);
        assert_eq!(out, vec![1.0, 10.0, 2.0, 20.0]);
    }

    #[test]
    fn architectures_build_for_every_env() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for env in EnvId::ALL {
            let spec = env.default_spec();
            for enc in [VisEncodeType::Simple, VisEncodeType::Resnet] {
                let cfg = TrainerConfig {
                    vis_encode_type: enc,
                    hidden_units: 16,
                    ..Default::default()
                };
                let p: Policy<f32> = Policy::new(PolicyArch::new(&spec, &cfg), &mut rng);
                let vec = vec![0.1f32; spec.vector_total()];
                let vis = vec![0.5f32; spec.visual_total()];
                let visual = spec.visual_dims.map(|_| vis.as_slice());
                let b = p.batch([(vec.as_slice(), visual), (vec.as_slice(), visual)]);
                let s = p.act(&b, &mut rng);
                assert_eq!(s.len(), 2);
                assert_eq!(s[0].action.discrete.len(), spec.discrete_branches.len());
                assert!(s.iter().all(|x| x.log_prob.is_finite() && x.value.is_finite()));
            }
        }
    }

    fn toy_minibatch(p: &Policy<f64>, rng: &mut ChaCha8Rng, n: usize) -> MiniBatch<f64> {
        let vlen = p.arch.vector_len;
        let vis_len = p.arch.visual.as_ref().map_or(0, |v| v.len());
        let vectors: Vec<Vec<f32>> = (0..n).map(|_| (0..vlen).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let visuals: Vec<Vec<f32>> = (0..n).map(|_| (0..vis_len).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let obs = p.batch(vectors.iter().zip(&visuals).map(|(v, w)| (v.as_slice(), Some(w.as_slice()))));
        let sampled = p.act(&obs, rng);
        MiniBatch {
            obs,
            discrete: sampled.iter().flat_map(|s| s.action.discrete.clone()).collect(),
            continuous: sampled.iter().flat_map(|s| s.raw_continuous.clone()).collect(),
            // perturbed so ratios differ from 1 but stay inside the trust region
            old_log_prob: sampled.iter().map(|s| s.log_prob + rng.random_range(-0.1..0.1)).collect(),
            advantages: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
            returns: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    fn fd_check(arch: PolicyArch, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p: Policy<f64> = Policy::new(arch, &mut rng);
        for v in p.params.iter_mut() {
            *v += rng.random_range(-0.2..0.2);
        }
        p.value_norm = ValueNorm { mean: 0.3, std: 1.7 };
        let mb = toy_minibatch(&p, &mut rng, 5);
        let coef = LossCoef {
            epsilon: 0.2,
            beta: 0.01,
            value_coef: 0.5,
        };
        let (_, g) = p.evaluate(&mb, &coef, true);
        let g = g.unwrap();
        let h = 1e-6;
        for i in 0..p.params.len() {
            let mut q = p.clone();
            q.params[i] += h;
            let up = q.evaluate(&mb, &coef, false).0.total;
            q.params[i] -= 2.0 * h;
            let down = q.evaluate(&mb, &coef, false).0.total;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + fd.abs()), "param {i}: fd {fd} vs analytic {}", g[i]);
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut spec = EnvId::Aws.default_spec();
        spec.visual_dims = Some((9, 9, 2));
        let cfg = TrainerConfig {
            hidden_units: 4,
            num_layers: 2,
            ..Default::default()
        };
        fd_check(PolicyArch::new(&spec, &cfg), 11);
        let cfg = TrainerConfig {
            hidden_units: 3,
            num_layers: 1,
            vis_encode_type: VisEncodeType::Resnet,
            ..Default::default()
        };
        let mut spec = EnvId::Opc.default_spec();
        spec.visual_dims = Some((5, 5, 1));
        fd_check(PolicyArch::new(&spec, &cfg), 12);
    }

    #[test]
    fn renormalizing_preserves_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = EnvId::Wfc.default_spec();
        let mut p: Policy<f64> = Policy::new(PolicyArch::new(&spec, &TrainerConfig::default()), &mut rng);
        let mb = toy_minibatch(&p, &mut rng, 4);
        let before = p.values(&mb.obs);
        p.set_value_norm(ValueNorm { mean: 4.0, std: 2.5 });
        p.set_value_norm(ValueNorm { mean: -1.0, std: 0.2 });
        for (a, b) in before.iter().zip(p.values(&mb.obs)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
