use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The five environments of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EnvId {
    /// Wind Farm Control
    Wfc,
    /// Wildfire Resource Management
    Wrm,
    /// Ocean Plastic Collection
    Opc,
    /// Drone-Based Reforestation
    Dbr,
    /// Aerial Wildfire Suppression
    Aws,
}

/// How an environment's scenario index is interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Pattern,
    TerrainLevel,
    None,
}

impl EnvId {
    pub const ALL: [EnvId; 5] = [EnvId::Wfc, EnvId::Wrm, EnvId::Opc, EnvId::Dbr, EnvId::Aws];

    pub fn short_name(self) -> &'static str {
        match self {
            EnvId::Wfc => "wfc",
            EnvId::Wrm => "wrm",
            EnvId::Opc => "opc",
            EnvId::Dbr => "dbr",
            EnvId::Aws => "aws",
        }
    }

    pub fn full_name(self) -> &'static str {
        match self {
            EnvId::Wfc => "Wind Farm Control",
            EnvId::Wrm => "Wildfire Resource Management",
            EnvId::Opc => "Ocean Plastic Collection",
            EnvId::Dbr => "Drone-Based Reforestation",
            EnvId::Aws => "Aerial Wildfire Suppression",
        }
    }

    /// Main task plus sub-tasks.
    pub fn task_count(self) -> usize {
        match self {
            EnvId::Wfc => 2,
            EnvId::Wrm => 3,
            EnvId::Opc => 4,
            EnvId::Dbr => 8,
            EnvId::Aws => 9,
        }
    }

    pub fn scenario_kind(self) -> ScenarioKind {
        match self {
            EnvId::Wfc => ScenarioKind::Pattern,
            EnvId::Opc => ScenarioKind::None,
            _ => ScenarioKind::TerrainLevel,
        }
    }

    /// Whether the agent count may be overridden (scalability runs).
    pub fn supports_agent_override(self) -> bool {
        matches!(self, EnvId::Wfc | EnvId::Dbr | EnvId::Aws)
    }

    pub fn default_spec(self) -> SpaceSpec {
        match self {
            EnvId::Wfc => SpaceSpec {
                vector_len: 6,
                vector_stacks: 1,
                visual_dims: None,
                visual_stacks: 0,
                continuous_actions: 0,
                discrete_branches: vec![3],
                agent_count: 8,
                episode_length: 5000,
            },
            EnvId::Wrm => SpaceSpec {
                vector_len: 8,
                vector_stacks: 2,
                visual_dims: None,
                visual_stacks: 0,
                continuous_actions: 0,
                discrete_branches: vec![3, 3, 3, 3],
                agent_count: 9,
                episode_length: 500,
            },
            EnvId::Opc => SpaceSpec {
                vector_len: 6,
                vector_stacks: 2,
                visual_dims: Some((25, 25, 1)),
                visual_stacks: 2,
                continuous_actions: 0,
                discrete_branches: vec![2, 3],
                agent_count: 3,
                episode_length: 5000,
            },
            EnvId::Dbr => SpaceSpec {
                vector_len: 10,
                vector_stacks: 2,
                visual_dims: Some((16, 16, 1)),
                visual_stacks: 1,
                continuous_actions: 3,
                discrete_branches: vec![2],
                agent_count: 3,
                episode_length: 2000,
            },
            EnvId::Aws => SpaceSpec {
                vector_len: 8,
                vector_stacks: 1,
                visual_dims: Some((42, 42, 3)),
                visual_stacks: 1,
                continuous_actions: 1,
                discrete_branches: vec![2],
                agent_count: 3,
                episode_length: 3000,
            },
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let id = match norm.as_str() {
            "wfc" | "windfarmcontrol" => EnvId::Wfc,
            "wrm" | "wildfireresourcemanagement" => EnvId::Wrm,
            "opc" | "oceanplasticcollection" => EnvId::Opc,
            "dbr" | "dronebasedreforestation" => EnvId::Dbr,
            "aws" | "aerialwildfiresuppression" => EnvId::Aws,
            _ => return Err(Error::config("env", format!("unknown environment `{s}`"))),
        };
        Ok(id)
    }
}

/// Declarative observation and action layout of an environment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    /// Components in one vector frame.
    pub vector_len: usize,
    pub vector_stacks: usize,
    /// `(width, height, channels)` of one visual frame.
    pub visual_dims: Option<(usize, usize, usize)>,
    pub visual_stacks: usize,
    pub continuous_actions: usize,
    pub discrete_branches: Vec<usize>,
    pub agent_count: usize,
    pub episode_length: usize,
}

impl SpaceSpec {
    /// Length of the stacked vector observation per agent.
    pub fn vector_total(&self) -> usize {
        self.vector_len * self.vector_stacks
    }

    pub fn visual_frame_len(&self) -> usize {
        self.visual_dims.map_or(0, |(w, h, c)| w * h * c)
    }

    /// Length of the stacked visual observation per agent.
    pub fn visual_total(&self) -> usize {
        self.visual_frame_len() * self.visual_stacks
    }

    pub fn validate(&self) -> Result<()> {
        if self.agent_count == 0 {
            return Err(Error::config("agent_count", "must be at least 1"));
        }
        if self.episode_length == 0 {
            return Err(Error::config("episode_length", "must be positive"));
        }
        if let Some(b) = self.discrete_branches.iter().find(|&&b| b < 2) {
            return Err(Error::config("discrete_branches", format!("branch size {b} < 2")));
        }
        if self.vector_stacks == 0 {
            return Err(Error::config("vector_stacks", "must be at least 1"));
        }
        if self.visual_dims.is_some() != (self.visual_stacks > 0) {
            return Err(Error::config("visual_stacks", "inconsistent with visual_dims"));
        }
        Ok(())
    }
}

/// Selection of environment, task and scenario for one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub env_id: EnvId,
    pub task: usize,
    /// Layout pattern (WFC) or terrain elevation level (WRM/DBR/AWS).
    pub scenario: Option<u32>,
    pub seed: u64,
    pub agent_count_override: Option<usize>,
}

impl EnvConfig {
    pub fn new(env_id: EnvId) -> Self {
        let scenario = match env_id.scenario_kind() {
            ScenarioKind::Pattern => Some(0),
            ScenarioKind::TerrainLevel => Some(1),
            ScenarioKind::None => None,
        };
        Self {
            env_id,
            task: 0,
            scenario,
            seed: 0,
            agent_count_override: None,
        }
    }

    pub fn with_task(mut self, task: usize) -> Self {
        self.task = task;
        self
    }

    pub fn with_scenario(mut self, scenario: Option<u32>) -> Self {
        self.scenario = scenario;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_agents(mut self, n: usize) -> Self {
        self.agent_count_override = Some(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let env = self.env_id;
        if self.task >= env.task_count() {
            return Err(Error::config(
                "task",
                format!("{env} has {} tasks, got index {}", env.task_count(), self.task),
            ));
        }
        match (env.scenario_kind(), self.scenario) {
            (ScenarioKind::Pattern, Some(p)) if p > 8 => {
                return Err(Error::config("pattern", format!("pattern {p} outside [0, 8]")))
            }
            (ScenarioKind::TerrainLevel, Some(l)) if !(1..=10).contains(&l) => {
                return Err(Error::config(
                    "terrain_level",
                    format!("terrain level {l} outside [1, 10]"),
                ))
            }
            (ScenarioKind::None, Some(_)) => {
                return Err(Error::config("scenario", format!("{env} takes no pattern or terrain level")))
            }
            (ScenarioKind::Pattern | ScenarioKind::TerrainLevel, None) => {
                return Err(Error::config("scenario", format!("{env} requires a pattern or terrain level")))
            }
            _ => {}
        }
        if let Some(n) = self.agent_count_override {
            if n == 0 {
                return Err(Error::config("agent_count_override", "must be at least 1"));
            }
            if !env.supports_agent_override() && n != env.default_spec().agent_count {
                return Err(Error::config(
                    "agent_count_override",
                    format!("{env} has a fixed agent count"),
                ));
            }
        }
        Ok(())
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count_override
            .unwrap_or_else(|| self.env_id.default_spec().agent_count)
    }

    pub fn spec(&self) -> SpaceSpec {
        let mut s = self.env_id.default_spec();
        s.agent_count = self.agent_count();
        s
    }
}
