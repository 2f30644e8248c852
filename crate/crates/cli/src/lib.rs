//! Config-driven train/test grids, agent-count sweeps and audit dumps over
//! the `ecomarl-core` environments.

pub mod config;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod yaml;

pub use config::{parse_config, Mode, RunConfig};
pub use error::{CliError, CliResult};
