//! Time-varying scalar fields sampled over the world plane.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::noise::{Fbm, GradientNoise, NOISE_SLOPE_BOUND};
use crate::geom::Vec2;
use crate::rng::{derive_key, stream, StreamId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FieldKind {
    /// Wind direction in degrees.
    WindDirection,
    Temperature,
    Humidity,
    Overcast,
}

impl FieldKind {
    pub fn label(self) -> &'static str {
        match self {
            FieldKind::WindDirection => "wind",
            FieldKind::Temperature => "temperature",
            FieldKind::Humidity => "humidity",
            FieldKind::Overcast => "overcast",
        }
    }
}

impl std::str::FromStr for FieldKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wind" | "wind-direction" => Ok(FieldKind::WindDirection),
            "temperature" => Ok(FieldKind::Temperature),
            "humidity" => Ok(FieldKind::Humidity),
            "overcast" => Ok(FieldKind::Overcast),
            _ => Err(crate::Error::config("kind", format!("unknown field kind `{s}`"))),
        }
    }
}

/// Smooth noise field over `(x, y, t)` mapped into `range`.
///
/// The wind-direction kind is a per-seed base heading plus a noise swing
/// of `±WIND_SWING_DEG`, so its range is centered on the drawn base.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub kind: FieldKind,
    pub seed: u64,
    /// Meters per noise lattice cell.
    pub spatial_scale: f64,
    /// Steps per noise lattice cell along time.
    pub temporal_scale: f64,
    pub range: (f64, f64),
    /// Positions are clamped to this half extent before sampling.
    pub half_extent: f64,
    fbm: Fbm,
    noise: GradientNoise,
}

pub const WIND_SWING_DEG: f64 = 30.0;

impl ScalarField {
    pub fn new(kind: FieldKind, seed: u64, half_extent: f64) -> Self {
        let key = derive_key(seed, kind.label());
        let (spatial_scale, temporal_scale, range) = match kind {
            FieldKind::WindDirection => {
                let base: f64 = stream(key, StreamId::Named("wind-base")).random_range(-180.0..180.0);
                (400.0, 1500.0, (base - WIND_SWING_DEG, base + WIND_SWING_DEG))
            }
            FieldKind::Temperature => (300.0, 400.0, (0.0, 1.0)),
            FieldKind::Humidity => (300.0, 400.0, (0.0, 1.0)),
            FieldKind::Overcast => (250.0, 200.0, (0.0, 1.0)),
        };
        Self {
            kind,
            seed,
            spatial_scale,
            temporal_scale,
            range,
            half_extent,
            fbm: Fbm {
                octaves: 3,
                persistence: 0.5,
                lacunarity: 2.0,
            },
            noise: GradientNoise::new(key),
        }
    }

    pub fn sample(&self, pos: Vec2, t: f64) -> f64 {
        let h = self.half_extent;
        let (x, y) = (pos.x.clamp(-h, h), pos.y.clamp(-h, h));
        let n = self.fbm.sample3(
            &self.noise,
            x / self.spatial_scale,
            y / self.spatial_scale,
            t / self.temporal_scale,
        );
        let (lo, hi) = self.range;
        (lo + (hi - lo) * 0.5 * (n + 1.0)).clamp(lo, hi)
    }

    /// Unit wind direction at `pos` (wind-direction fields).
    pub fn direction(&self, pos: Vec2, t: f64) -> Vec2 {
        Vec2::from_angle_deg(self.sample(pos, t))
    }

    /// Bound on |value change| per meter of displacement.
    pub fn lipschitz_per_meter(&self) -> f64 {
        let (lo, hi) = self.range;
        0.5 * (hi - lo) * NOISE_SLOPE_BOUND * self.fbm.slope_factor() / self.fbm.amplitude_sum() / self.spatial_scale
    }

    /// Bound on |value change| per step.
    pub fn lipschitz_per_step(&self) -> f64 {
        self.lipschitz_per_meter() * self.spatial_scale / self.temporal_scale
    }

    /// Samples a `n x n` grid covering the half extent at time `t`,
    /// row-major with row 0 at the most negative y.
    pub fn grid(&self, n: usize, t: f64) -> Vec<f64> {
        let step = 2.0 * self.half_extent / (n.max(2) - 1) as f64;
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let p = Vec2::new(-self.half_extent + c as f64 * step, -self.half_extent + r as f64 * step);
                out.push(self.sample(p, t));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn samples_stay_in_range_on_random_probe() {
        for kind in [FieldKind::WindDirection, FieldKind::Temperature, FieldKind::Humidity, FieldKind::Overcast] {
            let f = ScalarField::new(kind, 11, 600.0);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
            for _ in 0..10_000 {
                let p = Vec2::new(rng.random_range(-700.0..700.0), rng.random_range(-700.0..700.0));
                let v = f.sample(p, rng.random_range(0.0..5000.0));
                assert!(v >= f.range.0 && v <= f.range.1, "{kind:?} {v}");
            }
        }
    }

    #[test]
    fn neighbouring_cells_respect_lipschitz_bound() {
        let f = ScalarField::new(FieldKind::Temperature, 5, 600.0);
        let n = 61;
        let cell = 1200.0 / (n - 1) as f64;
        let g = f.grid(n, 100.0);
        let bound = f.lipschitz_per_meter() * cell;
        for r in 0..n {
            for c in 0..n - 1 {
                assert!((g[r * n + c + 1] - g[r * n + c]).abs() <= bound);
            }
        }
        for r in 0..n - 1 {
            for c in 0..n {
                assert!((g[(r + 1) * n + c] - g[r * n + c]).abs() <= bound);
            }
        }
    }

    #[test]
    fn wind_base_depends_on_seed() {
        let a = ScalarField::new(FieldKind::WindDirection, 7, 200.0);
        let b = ScalarField::new(FieldKind::WindDirection, 8, 200.0);
        assert_ne!(a.range, b.range);
        assert_eq!(a.range, ScalarField::new(FieldKind::WindDirection, 7, 200.0).range);
    }
}
