//! Flat-array view of the environment API for foreign callers.
//!
//! Layout: agent-major; within an agent the stacked vector block comes
//! first, then the stacked visual block (row-major, channels last).
//! Discrete actions are agent-major `[agent][branch]`, continuous actions
//! agent-major `[agent][axis]`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{make_env, AgentAction, AgentObs, EnvConfig, EnvHandle, EnvId, SpaceSpec};
use crate::error::{Error, Result};
use crate::tasks::RewardScaleMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatStep {
    pub observations: Vec<f32>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub episode_done: bool,
    /// JSON object with per-agent breakdowns and the env metric.
    pub info: String,
}

/// Per-agent observation length in the flat layout.
pub fn flat_obs_len(spec: &SpaceSpec) -> usize {
    spec.vector_total() + spec.visual_total()
}

pub fn flatten_observations(spec: &SpaceSpec, obs: &[AgentObs]) -> Vec<f32> {
    let mut out = Vec::with_capacity(flat_obs_len(spec) * obs.len());
    for o in obs {
        out.extend_from_slice(&o.vector);
        if let Some(v) = &o.visual {
            out.extend_from_slice(v);
        }
    }
    out
}

pub fn unflatten_observations(spec: &SpaceSpec, flat: &[f32]) -> Result<Vec<AgentObs>> {
    let per = flat_obs_len(spec);
    if per == 0 || flat.len() % per != 0 {
        return Err(Error::Contract(format!(
            "flat buffer of {} values is not a multiple of {per}",
            flat.len()
        )));
    }
    Ok(flat
        .chunks_exact(per)
        .map(|c| {
            let (v, vis) = c.split_at(spec.vector_total());
            AgentObs {
                vector: v.to_vec(),
                visual: spec.visual_dims.map(|_| vis.to_vec()),
            }
        })
        .collect())
}

/// Spec as a JSON dictionary.
pub fn spec_dict(env_id: EnvId, spec: &SpaceSpec) -> Value {
    json!({
        "env_id": env_id.short_name(),
        "name": env_id.full_name(),
        "vector_len": spec.vector_len,
        "vector_stacks": spec.vector_stacks,
        "visual_dims": spec.visual_dims.map(|(w, h, c)| vec![w, h, c]),
        "visual_stacks": spec.visual_stacks,
        "continuous_actions": spec.continuous_actions,
        "discrete_branches": spec.discrete_branches,
        "agent_count": spec.agent_count,
        "episode_length": spec.episode_length,
        "task_count": env_id.task_count(),
    })
}

/// Env ids and task names.
pub fn constants_table() -> Value {
    let envs: Vec<Value> = EnvId::ALL
        .iter()
        .map(|e| {
            json!({
                "id": e.short_name(),
                "name": e.full_name(),
                "tasks": RewardScaleMatrix::for_env(*e).task_names,
            })
        })
        .collect();
    Value::Array(envs)
}

/// Environment handle with flat-array inputs and outputs.
pub struct FlatEnv {
    env: EnvHandle,
}

impl FlatEnv {
    /// `scenario` is the pattern or terrain level; negative keeps the env default.
    pub fn make(env: &str, task: i64, scenario: i64, seed: u64) -> Result<Self> {
        let env_id: EnvId = env.parse()?;
        let task = usize::try_from(task).map_err(|_| Error::config("task", format!("negative task {task}")))?;
        let mut config = EnvConfig::new(env_id).with_task(task).with_seed(seed);
        if scenario >= 0 {
            config.scenario = Some(u32::try_from(scenario).map_err(|_| Error::config("scenario", "out of range"))?);
        }
        Ok(Self {
            env: make_env(&config)?,
        })
    }

    pub fn from_handle(env: EnvHandle) -> Self {
        Self { env }
    }

    pub fn spec(&self) -> Value {
        spec_dict(self.env.env_id(), self.env.spec())
    }

    pub fn reset(&mut self, seed: u64) -> Vec<f32> {
        let obs = self.env.reset(seed);
        flatten_observations(self.env.spec(), &obs)
    }

    pub fn step(&mut self, discrete: &[i64], continuous: &[f64]) -> Result<FlatStep> {
        let spec = self.env.spec().clone();
        let n = spec.agent_count;
        let nb = spec.discrete_branches.len();
        let nc = spec.continuous_actions;
        if discrete.len() != n * nb || continuous.len() != n * nc {
            return Err(Error::Action(format!(
                "expected {} discrete and {} continuous values, got {} and {}",
                n * nb,
                n * nc,
                discrete.len(),
                continuous.len()
            )));
        }
        let mut actions = Vec::with_capacity(n);
        for a in 0..n {
            let d: Result<Vec<usize>> = discrete[a * nb..(a + 1) * nb]
                .iter()
                .map(|&v| usize::try_from(v).map_err(|_| Error::Action(format!("negative action index {v}"))))
                .collect();
            actions.push(AgentAction::hybrid(continuous[a * nc..(a + 1) * nc].to_vec(), d?));
        }
        let out = self.env.step(&actions)?;
        let info = json!({
            "breakdowns": out.breakdowns.iter().map(|b| {
                b.named().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>()
            }).collect::<Vec<_>>(),
            "metric": { "name": out.metric.name, "per_agent": out.metric.per_agent },
            "step": self.env.step_count(),
        });
        Ok(FlatStep {
            observations: flatten_observations(&spec, &out.observations),
            rewards: out.rewards,
            dones: out.agent_done.iter().map(|&d| d || out.episode_done).collect(),
            episode_done: out.episode_done,
            info: info.to_string(),
        })
    }
}
