//! Seeded gradient noise and fractal sums.

use rand::seq::SliceRandom;

use crate::rng::{stream, StreamId};

/// 3D gradient noise with a seeded permutation table. Output lies in
/// roughly `[-1, 1]` and is exactly 0 on integer lattice points.
#[derive(Debug, Clone)]
pub struct GradientNoise {
    perm: [u8; 512],
}

const GRADS: [[f64; 3]; 12] = [
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
    [-1.0, -1.0, 0.0],
    [1.0, 0.0, 1.0],
    [-1.0, 0.0, 1.0],
    [1.0, 0.0, -1.0],
    [-1.0, 0.0, -1.0],
    [0.0, 1.0, 1.0],
    [0.0, -1.0, 1.0],
    [0.0, 1.0, -1.0],
    [0.0, -1.0, -1.0],
];

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

impl GradientNoise {
    pub fn new(seed: u64) -> Self {
        let mut table: Vec<u8> = (0..=255u8).collect();
        table.shuffle(&mut stream(seed, StreamId::Named("gradient-noise")));
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        Self { perm }
    }

    fn hash(&self, x: i64, y: i64, z: i64) -> usize {
        let p = &self.perm;
        let a = p[(x & 255) as usize] as usize;
        let b = p[(a + (y & 255) as usize) & 511] as usize;
        p[(b + (z & 255) as usize) & 511] as usize
    }

    fn grad(&self, ix: i64, iy: i64, iz: i64, dx: f64, dy: f64, dz: f64) -> f64 {
        let g = GRADS[self.hash(ix, iy, iz) % 12];
        g[0] * dx + g[1] * dy + g[2] * dz
    }

    pub fn sample3(&self, x: f64, y: f64, z: f64) -> f64 {
        let (fx, fy, fz) = (x.floor(), y.floor(), z.floor());
        let (ix, iy, iz) = (fx as i64, fy as i64, fz as i64);
        let (dx, dy, dz) = (x - fx, y - fy, z - fz);
        let (u, v, w) = (fade(dx), fade(dy), fade(dz));
        let c = |ox: i64, oy: i64, oz: i64| {
            self.grad(ix + ox, iy + oy, iz + oz, dx - ox as f64, dy - oy as f64, dz - oz as f64)
        };
        let x00 = lerp(c(0, 0, 0), c(1, 0, 0), u);
        let x10 = lerp(c(0, 1, 0), c(1, 1, 0), u);
        let x01 = lerp(c(0, 0, 1), c(1, 0, 1), u);
        let x11 = lerp(c(0, 1, 1), c(1, 1, 1), u);
        lerp(lerp(x00, x10, v), lerp(x01, x11, v), w).clamp(-1.0, 1.0)
    }

    pub fn sample2(&self, x: f64, y: f64) -> f64 {
        self.sample3(x, y, 0.5)
    }
}

/// Octave sum parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fbm {
    pub octaves: u32,
    pub persistence: f64,
    pub lacunarity: f64,
}

impl Default for Fbm {
    fn default() -> Self {
        Self {
            octaves: 4,
            persistence: 0.5,
            lacunarity: 2.0,
        }
    }
}

impl Fbm {
    /// Sum of amplitudes, used to normalize the octave sum to `[-1, 1]`.
    pub fn amplitude_sum(&self) -> f64 {
        (0..self.octaves).map(|k| self.persistence.powi(k as i32)).sum()
    }

    /// Sum of amplitude x frequency over octaves; scales the gradient bound.
    pub fn slope_factor(&self) -> f64 {
        (0..self.octaves)
            .map(|k| (self.persistence * self.lacunarity).powi(k as i32))
            .sum()
    }

    /// Normalized octave sum in `[-1, 1]`.
    pub fn sample3(&self, noise: &GradientNoise, x: f64, y: f64, z: f64) -> f64 {
        let mut amp = 1.0;
        let mut freq = 1.0;
        let mut sum = 0.0;
        for k in 0..self.octaves {
            // offset octaves so they do not share lattice zeros
            let o = k as f64 * 17.31;
            sum += amp * noise.sample3(x * freq + o, y * freq - o, z * freq + 0.5 * o);
            amp *= self.persistence;
            freq *= self.lacunarity;
        }
        (sum / self.amplitude_sum()).clamp(-1.0, 1.0)
    }

    pub fn sample2(&self, noise: &GradientNoise, x: f64, y: f64) -> f64 {
        self.sample3(noise, x, y, 0.5)
    }
}

/// Upper bound on |d noise / d coordinate| of a single octave (loose;
/// the exact maximum of this gradient set is below 2).
pub const NOISE_SLOPE_BOUND: f64 = 3.0;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn deterministic_and_bounded() {
        let a = GradientNoise::new(3);
        let b = GradientNoise::new(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let (x, y, z) = (rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(0.0..9.0));
            let v = a.sample3(x, y, z);
            assert_eq!(v, b.sample3(x, y, z));
            assert!((-1.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn seeds_differ() {
        let a = GradientNoise::new(1);
        let b = GradientNoise::new(2);
        let diff = (0..100).filter(|i| {
            let x = *i as f64 * 0.37;
            a.sample2(x, 0.3) != b.sample2(x, 0.3)
        });
        assert!(diff.count() > 50);
    }

    #[test]
    fn slope_bound_holds_on_fine_grid() {
        let n = GradientNoise::new(9);
        let h = 1e-3;
        for i in 0..4000 {
            let x = i as f64 * 0.0137;
            let y = (i as f64 * 0.731).sin() * 5.0;
            let d = (n.sample2(x + h, y) - n.sample2(x, y)).abs() / h;
            assert!(d <= NOISE_SLOPE_BOUND, "slope {d} at {x},{y}");
        }
    }
}
