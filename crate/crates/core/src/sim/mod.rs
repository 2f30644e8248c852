//! Environment-agnostic episode engine.
//!
//! Each environment implements [`Simulation`]: world generation, one
//! dynamics tick, and per-agent frame rendering. [`Episode`] wraps a
//! simulation with everything the five share: action validation, frame
//! stacking, step counting, done handling and task reward scaling.

pub mod flat;
pub mod space;
pub mod stack;
pub mod vec_env;

pub use space::{EnvConfig, EnvId, ScenarioKind, SpaceSpec};
pub use stack::FrameStack;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tasks::{apply_column, RewardBreakdown, RewardScaleMatrix, Scale};

/// Observation of one agent: stacked vector frames and, for environments
/// with a camera, stacked visual frames (row-major, channels last).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentObs {
    pub vector: Vec<f32>,
    pub visual: Option<Vec<f32>>,
}

/// Action of one agent.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentAction {
    pub discrete: Vec<usize>,
    pub continuous: Vec<f64>,
}

impl AgentAction {
    pub fn discrete(branches: impl Into<Vec<usize>>) -> Self {
        Self {
            discrete: branches.into(),
            continuous: Vec::new(),
        }
    }

    pub fn hybrid(continuous: impl Into<Vec<f64>>, discrete: impl Into<Vec<usize>>) -> Self {
        Self {
            discrete: discrete.into(),
            continuous: continuous.into(),
        }
    }

    /// All-zero action (every branch index 0, every axis 0).
    pub fn idle(spec: &SpaceSpec) -> Self {
        Self {
            discrete: vec![0; spec.discrete_branches.len()],
            continuous: vec![0.0; spec.continuous_actions],
        }
    }
}

/// Environment-specific metric reported every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvMetric {
    pub name: String,
    pub per_agent: Vec<f64>,
}

impl EnvMetric {
    pub fn new(name: &str, per_agent: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            per_agent,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.per_agent.is_empty() {
            0.0
        } else {
            self.per_agent.iter().sum::<f64>() / self.per_agent.len() as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub observations: Vec<AgentObs>,
    /// Task-scaled reward per agent.
    pub rewards: Vec<f64>,
    /// Agents whose own episode ended this step (border crossing). Such
    /// agents are respawned and `observations` already shows the new start.
    pub agent_done: Vec<bool>,
    pub episode_done: bool,
    /// True when the episode ended by reaching its length rather than a
    /// terminal event.
    pub truncated: bool,
    pub breakdowns: Vec<RewardBreakdown>,
    pub metric: EnvMetric,
}

/// The uniform interface of all five environments.
pub trait Environment: Send {
    fn env_id(&self) -> EnvId;
    fn config(&self) -> &EnvConfig;
    fn spec(&self) -> &SpaceSpec;
    /// Regenerates the world from `seed` and returns the first observations.
    fn reset(&mut self, seed: u64) -> Vec<AgentObs>;
    fn step(&mut self, actions: &[AgentAction]) -> Result<StepOutcome>;
    fn observations(&self) -> Vec<AgentObs>;
    fn step_count(&self) -> usize;
    fn is_done(&self) -> bool;
}

pub type EnvHandle = Box<dyn Environment>;

/// Result of one dynamics tick, before task scaling.
#[derive(Debug, Clone)]
pub struct Tick {
    pub breakdowns: Vec<RewardBreakdown>,
    pub agent_done: Vec<bool>,
    /// An environment-defined event ended the whole episode.
    pub terminal: bool,
    pub metric: EnvMetric,
}

/// World state and dynamics of one environment.
pub trait Simulation: Send {
    fn env_id(&self) -> EnvId;
    fn spec(&self) -> &SpaceSpec;
    /// Rebuilds the world deterministically from `seed`.
    fn regenerate(&mut self, seed: u64);
    /// Writes agent `agent`'s current vector frame (`spec().vector_len` values).
    fn vector_frame(&self, agent: usize, out: &mut [f32]);
    /// Writes agent `agent`'s current visual frame, if the env has a camera.
    fn visual_frame(&self, _agent: usize, _out: &mut [f32]) {}
    /// Applies validated, clamped actions and advances the world one tick.
    /// Agents reported in `Tick::agent_done` must already be respawned.
    fn advance(&mut self, actions: &[AgentAction]) -> Tick;
}

/// Generic episode runner around a [`Simulation`].
pub struct Episode<S: Simulation> {
    sim: S,
    config: EnvConfig,
    spec: SpaceSpec,
    column: Vec<Scale>,
    vector_stacks: Vec<FrameStack>,
    visual_stacks: Vec<FrameStack>,
    steps: usize,
    done: bool,
    scratch_vec: Vec<f32>,
    scratch_vis: Vec<f32>,
}

impl<S: Simulation> Episode<S> {
    pub fn new(sim: S, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let spec = sim.spec().clone();
        spec.validate()?;
        let column = RewardScaleMatrix::for_env(config.env_id).column(config.task)?;
        let n = spec.agent_count;
        let mut ep = Self {
            vector_stacks: (0..n).map(|_| FrameStack::new(spec.vector_len, spec.vector_stacks)).collect(),
            visual_stacks: (0..n)
                .map(|_| FrameStack::new(spec.visual_frame_len(), spec.visual_stacks))
                .collect(),
            scratch_vec: vec![0.0; spec.vector_len],
            scratch_vis: vec![0.0; spec.visual_frame_len()],
            sim,
            spec,
            column,
            steps: 0,
            done: false,
            config,
        };
        let seed = ep.config.seed;
        ep.reset(seed);
        Ok(ep)
    }

    pub fn sim(&self) -> &S {
        &self.sim
    }

    /// Direct world access for scripted scenarios and tests. Changes become
    /// visible in observations from the next step on.
    pub fn sim_mut(&mut self) -> &mut S {
        &mut self.sim
    }

    fn refresh_stack(&mut self, agent: usize, fill: bool) {
        self.sim.vector_frame(agent, &mut self.scratch_vec);
        debug_assert!(self.scratch_vec.iter().all(|v| (-1.0..=1.0).contains(v)));
        if fill {
            self.vector_stacks[agent].fill(&self.scratch_vec);
        } else {
            self.vector_stacks[agent].push(&self.scratch_vec);
        }
        if self.spec.visual_dims.is_some() {
            self.sim.visual_frame(agent, &mut self.scratch_vis);
            debug_assert!(self.scratch_vis.iter().all(|v| (0.0..=1.0).contains(v)));
            if fill {
                self.visual_stacks[agent].fill(&self.scratch_vis);
            } else {
                self.visual_stacks[agent].push(&self.scratch_vis);
            }
        }
    }

    fn validate_actions(&self, actions: &[AgentAction]) -> Result<Vec<AgentAction>> {
        if actions.len() != self.spec.agent_count {
            return Err(Error::Action(format!(
                "expected {} agent actions, got {}",
                self.spec.agent_count,
                actions.len()
            )));
        }
        let mut clean = Vec::with_capacity(actions.len());
        for (i, a) in actions.iter().enumerate() {
            if a.discrete.len() != self.spec.discrete_branches.len() {
                return Err(Error::Action(format!(
                    "agent {i}: expected {} discrete branches, got {}",
                    self.spec.discrete_branches.len(),
                    a.discrete.len()
                )));
            }
            for (b, (&v, &size)) in a.discrete.iter().zip(&self.spec.discrete_branches).enumerate() {
                if v >= size {
                    return Err(Error::Action(format!(
                        "agent {i}: branch {b} index {v} out of range 0..{size}"
                    )));
                }
            }
            if a.continuous.len() != self.spec.continuous_actions {
                return Err(Error::Action(format!(
                    "agent {i}: expected {} continuous actions, got {}",
                    self.spec.continuous_actions,
                    a.continuous.len()
                )));
            }
            if let Some(v) = a.continuous.iter().find(|v| !v.is_finite()) {
                return Err(Error::Action(format!("agent {i}: non-finite continuous action {v}")));
            }
            clean.push(AgentAction {
                discrete: a.discrete.clone(),
                continuous: a.continuous.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
            });
        }
        Ok(clean)
    }
}

impl<S: Simulation> Environment for Episode<S> {
    fn env_id(&self) -> EnvId {
        self.sim.env_id()
    }

    fn config(&self) -> &EnvConfig {
        &self.config
    }

    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn reset(&mut self, seed: u64) -> Vec<AgentObs> {
        self.config.seed = seed;
        self.sim.regenerate(seed);
        self.steps = 0;
        self.done = false;
        for a in 0..self.spec.agent_count {
            self.refresh_stack(a, true);
        }
        self.observations()
    }

    fn step(&mut self, actions: &[AgentAction]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::Lifecycle(format!(
                "{} episode finished after {} steps; reset before stepping",
                self.env_id(),
                self.steps
            )));
        }
        let actions = self.validate_actions(actions)?;
        let tick = self.sim.advance(&actions);
        self.steps += 1;
        let mut rewards = Vec::with_capacity(tick.breakdowns.len());
        for (i, bd) in tick.breakdowns.iter().enumerate() {
            let r = apply_column(&self.column, bd)?;
            if !r.is_finite() {
                return Err(Error::NonFinite(format!("agent {i} reward {r} from {:?}", bd.named())));
            }
            rewards.push(r);
        }
        for a in 0..self.spec.agent_count {
            self.refresh_stack(a, tick.agent_done[a]);
        }
        let truncated = self.steps >= self.spec.episode_length && !tick.terminal;
        self.done = tick.terminal || self.steps >= self.spec.episode_length;
        Ok(StepOutcome {
            observations: self.observations(),
            rewards,
            agent_done: tick.agent_done,
            episode_done: self.done,
            truncated,
            breakdowns: tick.breakdowns,
            metric: tick.metric,
        })
    }

    fn observations(&self) -> Vec<AgentObs> {
        (0..self.spec.agent_count)
            .map(|a| AgentObs {
                vector: self.vector_stacks[a].as_slice().to_vec(),
                visual: self
                    .spec
                    .visual_dims
                    .map(|_| self.visual_stacks[a].as_slice().to_vec()),
            })
            .collect()
    }

    fn step_count(&self) -> usize {
        self.steps
    }

    fn is_done(&self) -> bool {
        self.done
    }
}

/// Builds and resets an environment from `config`.
pub fn make_env(config: &EnvConfig) -> Result<EnvHandle> {
    use crate::envs::{aws, dbr, opc, wfc, wrm};
    config.validate()?;
    Ok(match config.env_id {
        EnvId::Wfc => Box::new(wfc::WindFarm::episode(config)?),
        EnvId::Wrm => Box::new(wrm::Watchtowers::episode(config)?),
        EnvId::Opc => Box::new(opc::OceanCleanup::episode(config)?),
        EnvId::Dbr => Box::new(dbr::Reforestation::episode(config)?),
        EnvId::Aws => Box::new(aws::FireSuppression::episode(config)?),
    })
}
