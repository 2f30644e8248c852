//! Heightmaps by terrain elevation level.

use serde::{Deserialize, Serialize};

use super::noise::{Fbm, GradientNoise};
use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::derive_key;

/// Height ceiling of every terrain, in meters.
pub const MAX_TERRAIN_HEIGHT: f64 = 40.0;
pub const DEFAULT_RESOLUTION: usize = 128;

/// Square heightmap centered on the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerrainGrid {
    /// Cells per side.
    pub resolution: usize,
    /// Meters per cell.
    pub cell_size: f64,
    /// Row-major heights in meters, row 0 at the most negative y.
    pub heights: Vec<f64>,
    pub elevation_level: u32,
}

/// Generator parameters for one elevation level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelParams {
    /// Height of the highest cell in meters.
    pub amplitude: f64,
    pub fbm: Fbm,
    /// Noise lattice cells across the whole map.
    pub base_frequency: f64,
}

impl LevelParams {
    pub fn for_level(level: u32) -> Self {
        let l = level as f64;
        Self {
            amplitude: MAX_TERRAIN_HEIGHT * l / 10.0,
            fbm: Fbm {
                octaves: 5,
                persistence: 0.35 + 0.04 * l,
                lacunarity: 2.0,
            },
            base_frequency: 1.5 + 0.25 * l,
        }
    }
}

/// Heightmap for `level` over a `2 * half_extent` square at the default
/// resolution.
pub fn generate_terrain(level: u32, seed: u64, half_extent: f64) -> Result<TerrainGrid> {
    generate_terrain_with(level, seed, half_extent, DEFAULT_RESOLUTION)
}

pub fn generate_terrain_with(level: u32, seed: u64, half_extent: f64, resolution: usize) -> Result<TerrainGrid> {
    if !(1..=10).contains(&level) {
        return Err(Error::config("terrain_level", format!("terrain level {level} outside [1, 10]")));
    }
    if resolution < 2 {
        return Err(Error::config("resolution", "need at least 2 cells per side"));
    }
    let params = LevelParams::for_level(level);
    let noise = GradientNoise::new(derive_key(seed, "terrain"));
    let mut raw = Vec::with_capacity(resolution * resolution);
    for r in 0..resolution {
        for c in 0..resolution {
            let u = (c as f64 + 0.5) / resolution as f64 * params.base_frequency;
            let v = (r as f64 + 0.5) / resolution as f64 * params.base_frequency;
            raw.push(params.fbm.sample2(&noise, u, v));
        }
    }
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-12);
    let heights = raw
        .iter()
        .map(|h| ((h - lo) / span * params.amplitude).clamp(0.0, MAX_TERRAIN_HEIGHT))
        .collect();
    Ok(TerrainGrid {
        resolution,
        cell_size: 2.0 * half_extent / resolution as f64,
        heights,
        elevation_level: level,
    })
}

impl TerrainGrid {
    /// Flat ground, for scenarios without terrain.
    pub fn flat(half_extent: f64, resolution: usize) -> Self {
        Self {
            resolution,
            cell_size: 2.0 * half_extent / resolution as f64,
            heights: vec![0.0; resolution * resolution],
            elevation_level: 0,
        }
    }

    pub fn half_extent(&self) -> f64 {
        self.cell_size * self.resolution as f64 / 2.0
    }

    pub fn cell(&self, row: usize, col: usize) -> f64 {
        self.heights[row * self.resolution + col]
    }

    pub fn max_height(&self) -> f64 {
        self.heights.iter().copied().fold(0.0, f64::max)
    }

    /// Bilinear height at a world position (clamped to the map).
    pub fn height_at(&self, p: Vec2) -> f64 {
        let n = self.resolution;
        let fx = ((p.x + self.half_extent()) / self.cell_size - 0.5).clamp(0.0, (n - 1) as f64);
        let fy = ((p.y + self.half_extent()) / self.cell_size - 0.5).clamp(0.0, (n - 1) as f64);
        let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(n - 1), (r0 + 1).min(n - 1));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        let top = self.cell(r0, c0) * (1.0 - tx) + self.cell(r0, c1) * tx;
        let bottom = self.cell(r1, c0) * (1.0 - tx) + self.cell(r1, c1) * tx;
        top * (1.0 - ty) + bottom * ty
    }

    /// Absolute height differences between 4-neighbours divided by cell size.
    pub fn slopes(&self) -> Vec<f64> {
        let n = self.resolution;
        let mut out = Vec::with_capacity(2 * n * (n - 1));
        for r in 0..n {
            for c in 0..n {
                if c + 1 < n {
                    out.push((self.cell(r, c + 1) - self.cell(r, c)).abs() / self.cell_size);
                }
                if r + 1 < n {
                    out.push((self.cell(r + 1, c) - self.cell(r, c)).abs() / self.cell_size);
                }
            }
        }
        out
    }

    pub fn mean_abs_slope(&self) -> f64 {
        let s = self.slopes();
        s.iter().sum::<f64>() / s.len() as f64
    }

    pub fn max_slope(&self) -> f64 {
        self.slopes().into_iter().fold(0.0, f64::max)
    }
}
