//! Forest and floating-trash placement.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::noise::{Fbm, GradientNoise};
use super::terrain::{TerrainGrid, MAX_TERRAIN_HEIGHT};
use crate::geom::Vec2;
use crate::rng::{derive_key, stream, StreamId};

/// Spacing of the candidate lattice trees are drawn from, in meters.
pub const TREE_SPACING: f64 = 10.0;
pub const TRASH_CLUSTER_SIGMA: f64 = 10.0;
pub const TRASH_PER_CLUSTER: usize = 60;
pub const TRASH_CLUSTERS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct TrashScatter {
    pub centers: Vec<Vec2>,
    pub pebbles: Vec<Vec2>,
}

/// Trees over a `±half_extent` square. Trees grow in noise-defined forest
/// patches; at higher elevation levels forest thins out and concentrates
/// on mid-slope heights.
pub fn scatter_forest(terrain: &TerrainGrid, seed: u64, half_extent: f64) -> Vec<Vec2> {
    let key = derive_key(seed, "forest");
    let noise = GradientNoise::new(key);
    let fbm = Fbm {
        octaves: 3,
        persistence: 0.5,
        lacunarity: 2.0,
    };
    let mut rng = stream(key, StreamId::Named("forest-jitter"));
    let level = terrain.elevation_level.max(1) as f64;
    // more of the map is bare at higher levels
    let threshold = -0.25 + 0.04 * level;
    let band_width = 1.6 - 0.12 * level;
    let cells = (2.0 * half_extent / TREE_SPACING).floor() as usize;
    let mut out = Vec::new();
    for r in 0..cells {
        for c in 0..cells {
            let base = Vec2::new(
                -half_extent + (c as f64 + 0.5) * TREE_SPACING,
                -half_extent + (r as f64 + 0.5) * TREE_SPACING,
            );
            let jitter = Vec2::new(
                rng.random_range(-0.35..0.35) * TREE_SPACING,
                rng.random_range(-0.35..0.35) * TREE_SPACING,
            );
            let keep: f64 = rng.random();
            let p = base + jitter;
            let density = fbm.sample2(&noise, p.x / 180.0, p.y / 180.0);
            if density < threshold {
                continue;
            }
            let hn = terrain.height_at(p) / MAX_TERRAIN_HEIGHT * 10.0 / level;
            let band = (-((hn - 0.5) / band_width).powi(2)).exp();
            if keep < band {
                out.push(p);
            }
        }
    }
    out
}

/// Trash pebbles drawn from Gaussian blobs around seeded cluster centers.
pub fn scatter_trash(seed: u64, half_extent: f64) -> TrashScatter {
    let mut rng = stream(derive_key(seed, "trash"), StreamId::Worldgen);
    let bound = 0.75 * half_extent;
    let centers: Vec<Vec2> = (0..TRASH_CLUSTERS)
        .map(|_| Vec2::new(rng.random_range(-bound..bound), rng.random_range(-bound..bound)))
        .collect();
    let normal = Normal::new(0.0, TRASH_CLUSTER_SIGMA).expect("valid sigma");
    let mut pebbles = Vec::with_capacity(TRASH_CLUSTERS * TRASH_PER_CLUSTER);
    for c in &centers {
        for _ in 0..TRASH_PER_CLUSTER {
            let p = Vec2::new(c.x + normal.sample(&mut rng), c.y + normal.sample(&mut rng));
            let lim = half_extent - 1.0;
            pebbles.push(Vec2::new(p.x.clamp(-lim, lim), p.y.clamp(-lim, lim)));
        }
    }
    TrashScatter { centers, pebbles }
}
