//! Batch stepping of independent environment instances.

use rayon::prelude::*;

use super::{make_env, AgentAction, AgentObs, EnvConfig, EnvHandle, SpaceSpec, StepOutcome};
use crate::error::{Error, Result};
use crate::rng::{derive_key, splitmix64};

/// Outcome of one instance in a batch step. When the episode finished,
/// `outcome.observations` are the final observations and `reset_obs` holds
/// the first observations of the automatically started next episode.
#[derive(Debug, Clone)]
pub struct InstanceStep {
    pub outcome: StepOutcome,
    pub reset_obs: Option<Vec<AgentObs>>,
}

impl InstanceStep {
    /// Observations the policy should act on next.
    pub fn next_obs(&self) -> &[AgentObs] {
        self.reset_obs.as_deref().unwrap_or(&self.outcome.observations)
    }
}

/// `N` independently owned instances of one environment configuration.
/// Instance `i` starts from a seed derived from `(base seed, i)`; every
/// auto-reset draws the next seed of that instance's sequence.
pub struct VecEnv {
    envs: Vec<EnvHandle>,
    episode_counters: Vec<u64>,
    base_seed: u64,
    parallel: bool,
}

impl VecEnv {
    pub fn new(config: &EnvConfig, num_envs: usize) -> Result<Self> {
        if num_envs == 0 {
            return Err(Error::config("num_envs", "must be at least 1"));
        }
        let mut envs = Vec::with_capacity(num_envs);
        for i in 0..num_envs {
            let mut c = config.clone();
            c.seed = Self::instance_seed(config.seed, i, 0);
            envs.push(make_env(&c)?);
        }
        Ok(Self {
            envs,
            episode_counters: vec![0; num_envs],
            base_seed: config.seed,
            parallel: rayon::current_num_threads() > 1 && num_envs > 1,
        })
    }

    /// Seed of `instance`'s `episode`-th episode. Instance 0's first episode
    /// uses the base seed itself.
    pub fn instance_seed(base: u64, instance: usize, episode: u64) -> u64 {
        if instance == 0 && episode == 0 {
            return base;
        }
        splitmix64(derive_key(base, "vec-env") ^ ((instance as u64) << 32) ^ episode)
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn spec(&self) -> &SpaceSpec {
        self.envs[0].spec()
    }

    pub fn set_parallel(&mut self, on: bool) {
        self.parallel = on;
    }

    pub fn observations(&self) -> Vec<Vec<AgentObs>> {
        self.envs.iter().map(|e| e.observations()).collect()
    }

    pub fn instances(&self) -> &[EnvHandle] {
        &self.envs
    }

    /// Steps every instance with its own per-agent actions.
    pub fn step(&mut self, actions: &[Vec<AgentAction>]) -> Result<Vec<InstanceStep>> {
        if actions.len() != self.envs.len() {
            return Err(Error::Action(format!(
                "expected actions for {} instances, got {}",
                self.envs.len(),
                actions.len()
            )));
        }
        let base = self.base_seed;
        let work = |(i, (env, counter)): (usize, (&mut EnvHandle, &mut u64)), acts: &Vec<AgentAction>| {
            let outcome = env.step(acts)?;
            let reset_obs = if outcome.episode_done {
                *counter += 1;
                Some(env.reset(Self::instance_seed(base, i, *counter)))
            } else {
                None
            };
            Ok(InstanceStep { outcome, reset_obs })
        };
        if self.parallel {
            self.envs
                .par_iter_mut()
                .zip(self.episode_counters.par_iter_mut())
                .enumerate()
                .zip(actions.par_iter())
                .map(|(x, a)| work(x, a))
                .collect()
        } else {
            self.envs
                .iter_mut()
                .zip(self.episode_counters.iter_mut())
                .enumerate()
                .zip(actions.iter())
                .map(|(x, a)| work(x, a))
                .collect()
        }
    }
}
