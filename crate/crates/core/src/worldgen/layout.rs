//! Wind turbine layout patterns.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::{stream, StreamId};

pub const PATTERN_NAMES: [&str; 9] = [
    "Default", "Grid", "Chain", "Circle", "Square", "Cross", "Two Rows", "Field", "Random",
];

/// Fixed irregular site used by the Field pattern; counts above its
/// length have no layout.
const FIELD_SITE: [(f64, f64); 16] = [
    (-120.0, 85.0),
    (-62.0, 110.0),
    (8.0, 96.0),
    (74.0, 121.0),
    (131.0, 70.0),
    (-138.0, 18.0),
    (-71.0, 38.0),
    (-4.0, 24.0),
    (66.0, 46.0),
    (140.0, -5.0),
    (-110.0, -58.0),
    (-40.0, -36.0),
    (31.0, -52.0),
    (98.0, -74.0),
    (-72.0, -121.0),
    (12.0, -128.0),
];

/// Turbine positions for `pattern` with `n` turbines inside a
/// `±half_extent` square. Patterns 0-7 ignore the seed.
pub fn layout_turbines(pattern: u32, n: usize, seed: u64, half_extent: f64) -> Result<Vec<Vec2>> {
    if n == 0 {
        return Err(Error::config("agent_count_override", "need at least one turbine"));
    }
    let no_tiling = |why: &str| {
        Err(Error::config(
            "agent_count_override",
            format!("pattern {pattern} ({}) has no {n}-turbine layout: {why}", PATTERN_NAMES[pattern.min(8) as usize]),
        ))
    };
    let spacing = 45.0;
    let pts = match pattern {
        0 => {
            // staggered rows of four, alternate rows shifted half a spacing
            let rows = n.div_ceil(4);
            (0..n)
                .map(|i| {
                    let (r, c) = (i / 4, i % 4);
                    let shift = if r % 2 == 1 { spacing / 2.0 } else { 0.0 };
                    Vec2::new(
                        (c as f64 - 1.5) * spacing + shift - spacing / 4.0,
                        ((rows - 1) as f64 / 2.0 - r as f64) * spacing,
                    )
                })
                .collect()
        }
        1 => {
            let cols = (n as f64).sqrt().ceil() as usize;
            let rows = n.div_ceil(cols);
            (0..n)
                .map(|i| {
                    let (r, c) = (i / cols, i % cols);
                    Vec2::new(
                        (c as f64 - (cols - 1) as f64 / 2.0) * spacing,
                        ((rows - 1) as f64 / 2.0 - r as f64) * spacing,
                    )
                })
                .collect()
        }
        2 => {
            let s = if n > 1 { spacing.min(1.8 * half_extent / (n - 1) as f64) } else { 0.0 };
            (0..n)
                .map(|i| Vec2::new((i as f64 - (n - 1) as f64 / 2.0) * s, 0.0))
                .collect()
        }
        3 => {
            if n == 1 {
                vec![Vec2::ZERO]
            } else {
                let radius = 0.6 * half_extent;
                (0..n)
                    .map(|i| Vec2::from_angle_deg(90.0 + 360.0 * i as f64 / n as f64) * radius)
                    .collect()
            }
        }
        4 => {
            if n % 4 != 0 {
                return no_tiling("count must be a multiple of 4");
            }
            let k = n / 4;
            let h = 0.6 * half_extent;
            let corners = [Vec2::new(-h, h), Vec2::new(h, h), Vec2::new(h, -h), Vec2::new(-h, -h)];
            let mut out = Vec::with_capacity(n);
            for s in 0..4 {
                let (a, b) = (corners[s], corners[(s + 1) % 4]);
                for j in 0..k {
                    out.push(a + (b - a) * (j as f64 / k as f64));
                }
            }
            out
        }
        5 => {
            if n % 4 != 0 {
                return no_tiling("count must be a multiple of 4");
            }
            let k = n / 4;
            let s = spacing.min(0.9 * half_extent / k as f64);
            let arms = [Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.0), Vec2::new(-1.0, 0.0)];
            let mut out = Vec::with_capacity(n);
            for j in 0..k {
                for arm in arms {
                    out.push(arm * (s * (j + 1) as f64));
                }
            }
            out
        }
        6 => {
            if n % 2 != 0 {
                return no_tiling("count must be even");
            }
            let k = n / 2;
            let s = if k > 1 { spacing.min(1.8 * half_extent / (k - 1) as f64) } else { 0.0 };
            let mut out = Vec::with_capacity(n);
            for y in [spacing, -spacing] {
                for j in 0..k {
                    out.push(Vec2::new((j as f64 - (k - 1) as f64 / 2.0) * s, y));
                }
            }
            out
        }
        7 => {
            if n > FIELD_SITE.len() {
                return no_tiling("the field site holds at most 16 turbines");
            }
            FIELD_SITE[..n].iter().map(|&(x, y)| Vec2::new(x, y) * (half_extent / 200.0)).collect()
        }
        8 => {
            let mut rng = stream(seed, StreamId::Named("turbine-layout"));
            let bound = 0.9 * half_extent;
            let min_sep = 20.0;
            let mut out: Vec<Vec2> = Vec::with_capacity(n);
            let mut attempts = 0;
            while out.len() < n {
                let p = Vec2::new(rng.random_range(-bound..bound), rng.random_range(-bound..bound));
                attempts += 1;
                if attempts > 100_000 || out.iter().all(|q| q.distance(p) >= min_sep) {
                    out.push(p);
                }
            }
            out
        }
        _ => return Err(Error::config("pattern", format!("pattern {pattern} outside [0, 8]"))),
    };
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_count_fits_every_pattern() {
        for p in 0..=8 {
            let pts = layout_turbines(p, 8, 1, 200.0).unwrap();
            assert_eq!(pts.len(), 8);
            assert!(pts.iter().all(|q| q.x.abs() <= 200.0 && q.y.abs() <= 200.0), "pattern {p}");
        }
    }

    #[test]
    fn non_tiling_counts_rejected() {
        assert!(layout_turbines(4, 6, 0, 200.0).is_err());
        assert!(layout_turbines(5, 3, 0, 200.0).is_err());
        assert!(layout_turbines(6, 5, 0, 200.0).is_err());
        assert!(layout_turbines(7, 17, 0, 200.0).is_err());
        assert!(layout_turbines(9, 8, 0, 200.0).is_err());
    }

    #[test]
    fn positions_distinct() {
        for p in 0..=8 {
            for n in [4, 8, 12, 16] {
                let pts = layout_turbines(p, n, 3, 200.0).unwrap();
                for i in 0..n {
                    for j in i + 1..n {
                        assert!(pts[i].distance(pts[j]) > 5.0, "pattern {p} n {n}");
                    }
                }
            }
        }
    }
}
