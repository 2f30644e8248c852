//! Headless multi-agent ecological environments and a parameter-sharing PPO
//! trainer.

pub mod envs;
pub mod error;
pub mod geom;
pub mod ppo;
pub mod rng;
pub mod sim;
pub mod tasks;
pub mod worldgen;

pub use error::{Error, Result};
pub use sim::{
    make_env, AgentAction, AgentObs, EnvConfig, EnvHandle, EnvId, EnvMetric, Environment, ScenarioKind, SpaceSpec,
    StepOutcome,
};
pub use tasks::{RewardBreakdown, RewardScaleMatrix};
