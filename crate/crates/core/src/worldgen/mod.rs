//! Seeded procedural generation. Every generator is a pure function of its
//! parameters and seed.

pub mod export;
pub mod field;
pub mod layout;
pub mod noise;
pub mod scatter;
pub mod terrain;

pub use field::{FieldKind, ScalarField};
pub use layout::{layout_turbines, PATTERN_NAMES};
pub use noise::{Fbm, GradientNoise};
pub use scatter::{scatter_forest, scatter_trash, TrashScatter};
pub use terrain::{generate_terrain, generate_terrain_with, TerrainGrid, MAX_TERRAIN_HEIGHT};
