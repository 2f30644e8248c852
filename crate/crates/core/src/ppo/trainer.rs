//! Rollout collection and PPO updates over a batch of environment
//! instances. Every agent of every instance is driven by the one shared
//! policy and contributes its own trajectory stream.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, CheckpointHeader};
use super::config::{TrainerConfig, MAX_GRAD_NORM, VALUE_COEF};
use super::curiosity::Curiosity;
use super::gae::{compute_gae, normalize_advantages};
use super::normalizer::RunningNorm;
use super::optim::{clip_grad_norm, Adam};
use super::policy::{LossCoef, LossStats, MiniBatch, ObsBatch, Policy, PolicyArch, ValueNorm};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamId};
use crate::sim::vec_env::VecEnv;
use crate::sim::{AgentAction, AgentObs, EnvConfig, SpaceSpec};
use crate::tasks::RewardScaleMatrix;

/// How a transition ended its stream segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentEnd {
    Continues,
    /// Episode over for this agent; no bootstrap.
    Terminal,
    /// Cut by the episode length; bootstrap from the final observation.
    Truncated(f64),
}

#[derive(Debug, Clone)]
pub struct Transition {
    pub vector: Vec<f32>,
    pub visual: Vec<f32>,
    pub action: AgentAction,
    pub raw_continuous: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
    /// Reward fed to the advantage estimate (extrinsic strength times the
    /// task reward plus any curiosity bonus).
    pub reward: f64,
    pub end: SegmentEnd,
    /// Next vector observation, kept only when curiosity is enabled.
    pub next_vector: Vec<f32>,
}

/// Transitions of one agent of one instance, in time order.
#[derive(Debug, Clone, Default)]
pub struct Stream {
    pub transitions: Vec<Transition>,
    /// Value of the observation following the last transition.
    pub tail_value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Rollout {
    pub streams: Vec<Stream>,
}

impl Rollout {
    pub fn len(&self) -> usize {
        self.streams.iter().map(|s| s.transitions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Agent steps taken when the episode finished.
    pub end_step: u64,
    pub instance: usize,
    /// Mean over agents of the task-scaled episode return.
    pub reward: f64,
    pub metric: f64,
}

/// Per-collection statistics; `components` are mean raw reward components
/// per agent step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkStats {
    pub end_step: u64,
    pub transitions: usize,
    pub mean_reward: f64,
    pub components: Vec<f64>,
    pub metric: f64,
}

/// Wall-clock split of a training run. Not part of any deterministic output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    /// Environment stepping plus action sampling.
    pub collect_seconds: f64,
    pub update_seconds: f64,
    /// Vectorized environment steps (one per instance batch).
    pub env_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub step: u64,
    pub cumulative_reward: f64,
    pub env_metric: f64,
    pub episodes: usize,
    pub learning_rate: f64,
    pub loss: LossStats,
}

pub struct Trainer {
    pub config: TrainerConfig,
    pub env_config: EnvConfig,
    pub policy: Policy<f32>,
    optim: Adam,
    normalizer: Option<RunningNorm>,
    returns: RunningNorm,
    curiosity: Option<Curiosity>,
    envs: VecEnv,
    obs: Vec<Vec<AgentObs>>,
    running: Vec<Vec<f64>>,
    sample_rng: ChaCha8Rng,
    minibatch_rng: ChaCha8Rng,
    steps: u64,
    buffer: Rollout,
    last_metric: f64,
    last_loss: LossStats,
    pub episodes: Vec<EpisodeRecord>,
    pub chunks: Vec<ChunkStats>,
    pub updates: u64,
    pub timing: Timing,
}

impl Trainer {
    pub fn new(config: TrainerConfig, env_config: EnvConfig, num_envs: usize) -> Result<Self> {
        config.validate()?;
        env_config.validate()?;
        let envs = VecEnv::new(&env_config, num_envs)?;
        let spec = envs.spec().clone();
        let arch = PolicyArch::new(&spec, &config);
        let seed = env_config.seed;
        let mut init_rng = stream(seed, StreamId::PolicyInit);
        let policy = Policy::new(arch, &mut init_rng);
        let curiosity = config.curiosity.clone().map(|c| {
            Curiosity::new(c, spec.vector_total(), &spec.discrete_branches, spec.continuous_actions, &mut init_rng)
        });
        let obs = envs.observations();
        let running = obs.iter().map(|o| vec![0.0; o.len()]).collect();
        Ok(Self {
            optim: Adam::new(policy.params.len()),
            normalizer: config.normalize.then(|| RunningNorm::new(spec.vector_total())),
            returns: RunningNorm::new(1),
            config,
            env_config,
            policy,
            curiosity,
            envs,
            obs,
            running,
            sample_rng: stream(seed, StreamId::PolicySample),
            minibatch_rng: stream(seed, StreamId::Minibatch),
            steps: 0,
            buffer: Rollout::default(),
            last_metric: 0.0,
            last_loss: LossStats::default(),
            episodes: Vec::new(),
            chunks: Vec::new(),
            updates: 0,
            timing: Timing::default(),
        })
    }

    pub fn spec(&self) -> &SpaceSpec {
        self.envs.spec()
    }

    /// Agent steps taken so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn agents_per_step(&self) -> usize {
        self.obs.iter().map(|o| o.len()).sum()
    }

    fn normalized(&self, v: &[f32]) -> Vec<f32> {
        match &self.normalizer {
            Some(n) => {
                let mut out = Vec::with_capacity(v.len());
                n.apply(v, &mut out);
                out
            }
            None => v.to_vec(),
        }
    }

    fn batch_of(&self, obs: &[(Vec<f32>, Option<&[f32]>)]) -> ObsBatch<f32> {
        self.policy.batch(obs.iter().map(|(v, vis)| (v.as_slice(), *vis)))
    }

    /// Runs the shared policy for `horizon` steps on every instance.
    pub fn collect(&mut self, horizon: usize) -> Result<Rollout> {
        let per_instance: Vec<usize> = self.obs.iter().map(|o| o.len()).collect();
        let total: usize = per_instance.iter().sum();
        let mut streams: Vec<Stream> = (0..total).map(|_| Stream::default()).collect();
        let component_count = RewardScaleMatrix::for_env(self.env_config.env_id).component_count();
        let mut components = vec![0.0; component_count];
        let mut reward_sum = 0.0;
        let mut metric_sum = 0.0;
        for _ in 0..horizon {
            let inputs: Vec<(Vec<f32>, Option<&[f32]>)> = self
                .obs
                .iter()
                .flatten()
                .map(|o| (self.normalized(&o.vector), o.visual.as_deref()))
                .collect();
            let batch = self.batch_of(&inputs);
            let sampled = self.policy.act(&batch, &mut self.sample_rng);
            let mut actions = Vec::with_capacity(self.obs.len());
            let mut k = 0;
            for &n in &per_instance {
                actions.push(sampled[k..k + n].iter().map(|s| s.action.clone()).collect::<Vec<_>>());
                k += n;
            }
            let results = self.envs.step(&actions)?;
            if let Some(n) = &mut self.normalizer {
                for o in self.obs.iter().flatten() {
                    n.update(&o.vector);
                }
            }
            let flat_actions: Vec<AgentAction> = actions.iter().flatten().cloned().collect();
            let bonus = match &self.curiosity {
                Some(c) => {
                    let cur: Vec<f32> = inputs.iter().flat_map(|(v, _)| v.iter().copied()).collect();
                    let next: Vec<f32> = results
                        .iter()
                        .flat_map(|r| r.outcome.observations.iter())
                        .flat_map(|o| self.normalized(&o.vector))
                        .collect();
                    Some((c.bonus(&cur, &flat_actions, &next), next))
                }
                None => None,
            };
            let mut k = 0;
            let mut metric_step = 0.0;
            for (e, res) in results.iter().enumerate() {
                let out = &res.outcome;
                let truncated_values = if out.truncated {
                    let inputs: Vec<(Vec<f32>, Option<&[f32]>)> = out
                        .observations
                        .iter()
                        .map(|o| (self.normalized(&o.vector), o.visual.as_deref()))
                        .collect();
                    Some(self.policy.values(&self.batch_of(&inputs)))
                } else {
                    None
                };
                metric_step += out.metric.mean();
                for a in 0..per_instance[e] {
                    let r = out.rewards[a];
                    self.running[e][a] += r;
                    reward_sum += r;
                    for (acc, v) in components.iter_mut().zip(&out.breakdowns[a].values) {
                        *acc += v;
                    }
                    let mut reward = self.config.extrinsic_strength * r;
                    let mut next_vector = Vec::new();
                    if let Some((b, next)) = &bonus {
                        reward += b[k];
                        let len = self.spec().vector_total();
                        next_vector = next[k * len..(k + 1) * len].to_vec();
                    }
                    let end = if out.agent_done[a] {
                        SegmentEnd::Terminal
                    } else if let Some(v) = &truncated_values {
                        SegmentEnd::Truncated(v[a])
                    } else if out.episode_done {
                        SegmentEnd::Terminal
                    } else {
                        SegmentEnd::Continues
                    };
                    let s = &sampled[k];
                    streams[k].transitions.push(Transition {
                        vector: inputs[k].0.clone(),
                        visual: inputs[k].1.map(|v| v.to_vec()).unwrap_or_default(),
                        action: s.action.clone(),
                        raw_continuous: s.raw_continuous.clone(),
                        log_prob: s.log_prob,
                        value: s.value,
                        reward,
                        end,
                        next_vector,
                    });
                    k += 1;
                }
                self.steps += per_instance[e] as u64;
                if out.episode_done {
                    let n = per_instance[e] as f64;
                    self.episodes.push(EpisodeRecord {
                        end_step: self.steps,
                        instance: e,
                        reward: self.running[e].iter().sum::<f64>() / n,
                        metric: out.metric.mean(),
                    });
                    self.running[e].iter_mut().for_each(|v| *v = 0.0);
                }
            }
            self.last_metric = metric_step / results.len() as f64;
            metric_sum += self.last_metric;
            self.obs = results.iter().map(|r| r.next_obs().to_vec()).collect();
        }
        let inputs: Vec<(Vec<f32>, Option<&[f32]>)> = self
            .obs
            .iter()
            .flatten()
            .map(|o| (self.normalized(&o.vector), o.visual.as_deref()))
            .collect();
        let tail = self.policy.values(&self.batch_of(&inputs));
        for (s, v) in streams.iter_mut().zip(tail) {
            s.tail_value = v;
        }
        let transitions = horizon * total;
        let denom = transitions.max(1) as f64;
        self.chunks.push(ChunkStats {
            end_step: self.steps,
            transitions,
            mean_reward: reward_sum / denom,
            components: components.iter().map(|c| c / denom).collect(),
            metric: metric_sum / horizon.max(1) as f64,
        });
        Ok(Rollout { streams })
    }

    /// Advantages and returns for every transition of `rollout`, stream by
    /// stream in order.
    pub fn advantages(&self, rollout: &Rollout) -> Result<(Vec<f64>, Vec<f64>)> {
        let gamma = self.config.gamma;
        let lambda = self.config.lambd;
        let mut adv = Vec::with_capacity(rollout.len());
        let mut ret = Vec::with_capacity(rollout.len());
        for s in &rollout.streams {
            let mut start = 0;
            while start < s.transitions.len() {
                let mut end = start;
                while end + 1 < s.transitions.len() && s.transitions[end].end == SegmentEnd::Continues {
                    end += 1;
                }
                let seg = &s.transitions[start..=end];
                let rewards: Vec<f64> = seg.iter().map(|t| t.reward).collect();
                let mut values: Vec<f64> = seg.iter().map(|t| t.value).collect();
                let mut dones = vec![false; seg.len()];
                match seg[seg.len() - 1].end {
                    SegmentEnd::Continues => values.push(s.tail_value),
                    SegmentEnd::Truncated(v) => values.push(v),
                    SegmentEnd::Terminal => {
                        values.push(0.0);
                        dones[seg.len() - 1] = true;
                    }
                }
                let (a, r) = compute_gae(&rewards, &values, &dones, gamma, lambda)?;
                adv.extend(a);
                ret.extend(r);
                start = end + 1;
            }
        }
        Ok((adv, ret))
    }

    fn minibatch(&self, items: &[&Transition], adv: &[f64], ret: &[f64], idx: &[usize]) -> MiniBatch<f32> {
        let obs = self
            .policy
            .batch(idx.iter().map(|&i| (items[i].vector.as_slice(), Some(items[i].visual.as_slice()))));
        MiniBatch {
            obs,
            discrete: idx.iter().flat_map(|&i| items[i].action.discrete.iter().copied()).collect(),
            continuous: idx
                .iter()
                .flat_map(|&i| items[i].raw_continuous.iter().map(|&v| v as f32))
                .collect(),
            old_log_prob: idx.iter().map(|&i| items[i].log_prob).collect(),
            advantages: idx.iter().map(|&i| adv[i]).collect(),
            returns: idx.iter().map(|&i| ret[i]).collect(),
        }
    }

    /// `num_epoch` passes of shuffled minibatch updates over `rollout`.
    pub fn update(&mut self, rollout: &Rollout) -> Result<LossStats> {
        let (mut adv, ret) = self.advantages(rollout)?;
        normalize_advantages(&mut adv);
        let lr = self.config.lr_at(self.steps);
        for r in &ret {
            self.returns.update_f64(&[*r]);
        }
        // a frozen policy (testing) must keep its parameters bit for bit
        if lr != 0.0 {
            self.policy.set_value_norm(ValueNorm {
                mean: self.returns.mean[0],
                std: self.returns.variance(0).sqrt().max(1e-2),
            });
        }
        let items: Vec<&Transition> = rollout.streams.iter().flat_map(|s| s.transitions.iter()).collect();
        let n = items.len();
        if n == 0 {
            return Ok(LossStats::default());
        }
        let bs = self.config.batch_size.min(n);
        let curiosity_lr = self.config.curiosity.as_ref().map_or(0.0, |c| {
            let mut c2 = self.config.clone();
            c2.learning_rate = c.learning_rate;
            c2.lr_at(self.steps)
        });
        let coef = LossCoef {
            epsilon: self.config.epsilon,
            beta: self.config.beta,
            value_coef: VALUE_COEF,
        };
        let mut order: Vec<usize> = (0..n).collect();
        let mut acc = LossStats::default();
        let mut count = 0.0;
        for _ in 0..self.config.num_epoch {
            order.shuffle(&mut self.minibatch_rng);
            for idx in order.chunks_exact(bs) {
                let mb = self.minibatch(&items, &adv, &ret, idx);
                let (stats, grads) = self.policy.evaluate(&mb, &coef, true);
                let mut grads = grads.expect("gradient requested");
                if !stats.total.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "loss at step {} update {}: policy {} value {} entropy {}",
                        self.steps, self.updates, stats.policy_loss, stats.value_loss, stats.entropy
                    )));
                }
                clip_grad_norm(&mut grads, MAX_GRAD_NORM);
                self.optim.step(&mut self.policy.params, &grads, lr);
                if let Some(c) = &mut self.curiosity {
                    let cur: Vec<f32> = idx.iter().flat_map(|&i| items[i].vector.iter().copied()).collect();
                    let next: Vec<f32> = idx.iter().flat_map(|&i| items[i].next_vector.iter().copied()).collect();
                    let acts: Vec<AgentAction> = idx.iter().map(|&i| items[i].action.clone()).collect();
                    c.train(&cur, &acts, &next, curiosity_lr);
                }
                acc.policy_loss += stats.policy_loss;
                acc.value_loss += stats.value_loss;
                acc.entropy += stats.entropy;
                acc.total += stats.total;
                acc.clip_fraction += stats.clip_fraction;
                acc.approx_kl += stats.approx_kl;
                count += 1.0;
            }
        }
        self.updates += 1;
        let c = f64::max(count, 1.0);
        self.last_loss = LossStats {
            policy_loss: acc.policy_loss / c,
            value_loss: acc.value_loss / c,
            entropy: acc.entropy / c,
            total: acc.total / c,
            clip_fraction: acc.clip_fraction / c,
            approx_kl: acc.approx_kl / c,
        };
        Ok(self.last_loss)
    }

    fn summary(&self, since_episode: usize) -> Summary {
        let recent = &self.episodes[since_episode..];
        let cumulative_reward = if recent.is_empty() {
            let all: Vec<f64> = self.running.iter().flatten().copied().collect();
            all.iter().sum::<f64>() / all.len().max(1) as f64
        } else {
            recent.iter().map(|e| e.reward).sum::<f64>() / recent.len() as f64
        };
        Summary {
            step: self.steps,
            cumulative_reward,
            env_metric: self.last_metric,
            episodes: recent.len(),
            learning_rate: self.config.lr_at(self.steps),
            loss: self.last_loss,
        }
    }

    /// Trains until `max_steps` agent steps, calling `on_summary` every
    /// `summary_freq` steps and once at the end.
    pub fn run(&mut self, mut on_summary: impl FnMut(&Summary)) -> Result<()> {
        let per_step = self.agents_per_step() as u64;
        let mut next_summary = (self.steps / self.config.summary_freq + 1) * self.config.summary_freq;
        let mut summary_from = self.episodes.len();
        while self.steps < self.config.max_steps {
            let remaining = (self.config.max_steps - self.steps).div_ceil(per_step) as usize;
            let horizon = self.config.time_horizon.min(remaining);
            let t0 = Instant::now();
            let chunk = self.collect(horizon)?;
            self.timing.collect_seconds += t0.elapsed().as_secs_f64();
            self.timing.env_steps += horizon as u64;
            self.buffer.streams.extend(chunk.streams);
            if self.buffer.len() >= self.config.buffer_size || self.steps >= self.config.max_steps {
                let buffer = std::mem::take(&mut self.buffer);
                let t1 = Instant::now();
                self.update(&buffer)?;
                self.timing.update_seconds += t1.elapsed().as_secs_f64();
            }
            while self.steps >= next_summary {
                on_summary(&self.summary(summary_from));
                summary_from = self.episodes.len();
                next_summary += self.config.summary_freq;
            }
        }
        if self.steps % self.config.summary_freq != 0 {
            on_summary(&self.summary(summary_from));
        }
        Ok(())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            header: CheckpointHeader {
                arch: self.policy.arch.clone(),
                trainer: self.config.clone(),
                env: self.env_config.clone(),
                steps: self.steps,
                param_count: self.policy.params.len(),
                normalizer: self.normalizer.clone(),
                value_norm: self.policy.value_norm,
            },
            params: self.policy.params.clone(),
        }
    }

    /// Loads policy parameters (and observation statistics) from `ck`.
    pub fn restore(&mut self, ck: &Checkpoint) -> Result<()> {
        ck.restore_into(&mut self.policy)?;
        if self.normalizer.is_some() {
            self.normalizer = ck.header.normalizer.clone();
        }
        Ok(())
    }
}
