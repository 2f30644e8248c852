//! Small planar geometry helpers shared by the environments.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `deg` degrees counter-clockwise from +x.
    pub fn from_angle_deg(deg: f64) -> Self {
        let r = deg.to_radians();
        Self::new(r.cos(), r.sin())
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| Vec2::new(self.x / n, self.y / n))
    }

    /// Counter-clockwise rotation by `deg` degrees.
    pub fn rotated_deg(self, deg: f64) -> Vec2 {
        let (s, c) = deg.to_radians().sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Clockwise perpendicular: the "right-hand" side when facing along `self`.
    pub fn right(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn angle_deg(self) -> f64 {
        self.y.atan2(self.x).to_degrees()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Linear remap of `v` from `[a0, a1]` to `[b0, b1]` (no clamping).
pub fn remap(v: f64, a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    b0 + (v - a0) * (b1 - b0) / (a1 - a0)
}

/// Distance from `p` to the segment `a..b`.
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Bucketed point index over a square region for radius and nearest queries.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    half_extent: f64,
    cell: f64,
    side: usize,
    buckets: Vec<Vec<u32>>,
}

impl SpatialGrid {
    pub fn new(half_extent: f64, cell: f64) -> Self {
        let side = ((2.0 * half_extent / cell).ceil() as usize).max(1);
        Self {
            half_extent,
            cell,
            side,
            buckets: vec![Vec::new(); side * side],
        }
    }

    pub fn build(half_extent: f64, cell: f64, points: &[Vec2]) -> Self {
        let mut g = Self::new(half_extent, cell);
        for (i, p) in points.iter().enumerate() {
            g.insert(i as u32, *p);
        }
        g
    }

    fn coord(&self, v: f64) -> usize {
        let c = ((v + self.half_extent) / self.cell).floor();
        (c.max(0.0) as usize).min(self.side - 1)
    }

    pub fn insert(&mut self, id: u32, p: Vec2) {
        let (cx, cy) = (self.coord(p.x), self.coord(p.y));
        self.buckets[cy * self.side + cx].push(id);
    }

    /// Calls `f` for every id whose bucket intersects the query square.
    /// Callers filter by exact distance.
    pub fn for_each_near(&self, p: Vec2, radius: f64, mut f: impl FnMut(u32)) {
        let x0 = self.coord(p.x - radius);
        let x1 = self.coord(p.x + radius);
        let y0 = self.coord(p.y - radius);
        let y1 = self.coord(p.y + radius);
        for cy in y0..=y1 {
            for cx in x0..=x1 {
                for &id in &self.buckets[cy * self.side + cx] {
                    f(id);
                }
            }
        }
    }

    /// Nearest id satisfying `accept`, scanning rings outward. Ties resolve
    /// to the lower id.
    pub fn nearest(
        &self,
        p: Vec2,
        points: &[Vec2],
        mut accept: impl FnMut(u32) -> bool,
    ) -> Option<(u32, f64)> {
        let cx = self.coord(p.x) as isize;
        let cy = self.coord(p.y) as isize;
        let side = self.side as isize;
        let mut best: Option<(u32, f64)> = None;
        for ring in 0..=side {
            // once a candidate exists, rings beyond its distance cannot improve it
            if let Some((_, d)) = best {
                let ring_min = (ring as f64 - 1.0) * self.cell;
                if ring_min > d {
                    break;
                }
            }
            let mut any = false;
            for y in (cy - ring)..=(cy + ring) {
                for x in (cx - ring)..=(cx + ring) {
                    let on_ring = (y - cy).abs() == ring || (x - cx).abs() == ring;
                    if !on_ring || x < 0 || y < 0 || x >= side || y >= side {
                        continue;
                    }
                    any = true;
                    for &id in &self.buckets[(y * side + x) as usize] {
                        if !accept(id) {
                            continue;
                        }
                        let d = p.distance(points[id as usize]);
                        match best {
                            Some((bid, bd)) if d > bd || (d == bd && id > bid) => {}
                            _ => best = Some((id, d)),
                        }
                    }
                }
            }
            if !any {
                break;
            }
        }
        best
    }
}
