//! Proximal policy optimization with parameter sharing.

pub mod checkpoint;
pub mod config;
pub mod curiosity;
pub mod dist;
pub mod gae;
pub mod nn;
pub mod normalizer;
pub mod objective;
pub mod optim;
pub mod policy;
pub mod trainer;

pub use config::{CuriosityConfig, LrSchedule, TrainerConfig, VisEncodeType};
pub use gae::compute_gae;
pub use objective::ppo_clip_objective;
pub use policy::{Policy, PolicyArch};
pub use trainer::Trainer;
