//! Ocean plastic collection: vessels steer and accelerate through clustered
//! floating trash.

use rand::Rng;

use crate::error::Result;
use crate::geom::{segment_distance, SpatialGrid, Vec2};
use crate::rng::{derive_key, stream, StreamId};
use crate::sim::{AgentAction, EnvConfig, EnvId, EnvMetric, Episode, SpaceSpec, Simulation, Tick};
use crate::tasks::RewardBreakdown;
use crate::worldgen::scatter_trash;

pub const HALF_EXTENT: f64 = 200.0;
pub const TURN_RATE: f64 = 4.0;
pub const ACCELERATION: f64 = 0.4;
pub const SPEED_DECAY: f64 = 0.95;
pub const COLLECTION_RADIUS: f64 = 2.0;
pub const COLLISION_RADIUS: f64 = 3.0;
pub const LOWEST_COUNT_FACTOR: f64 = 0.01;
pub const BORDER_PENALTY: f64 = -100.0;
pub const VESSEL_COLLISION_PENALTY: f64 = -100.0;
/// Description value; the calculation listing gives 10.
pub const CLOSE_TO_VESSEL_REWARD: f64 = 1.0;
pub const CLOSE_TO_VESSEL_DISTANCE: f64 = 10.0;
pub const NEARBY_TRASH_RADIUS: f64 = 25.0;
/// Description value; the calculation listing gives -100.
pub const TRASH_CONTACT_PENALTY: f64 = -1.0;
pub const GRID_SIDE: usize = 25;
pub const GRID_CELL: f64 = 2.0;
/// Pebbles per cell at which a grid cell saturates.
pub const GRID_CELL_CAP: f64 = 4.0;
const SPAWN_EXTENT: f64 = 150.0;

pub const COLLECT_TRASH: usize = 0;
pub const GLOBAL_LOWEST: usize = 1;
pub const CROSSED_BORDER: usize = 2;
pub const COLLIDED_VESSEL: usize = 3;
pub const CLOSE_TO_VESSEL: usize = 4;
pub const NEARBY_TRASH_DELTA: usize = 5;
pub const COLLIDE_WITH_TRASH: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct Vessel {
    pub position: Vec2,
    pub heading: Vec2,
    /// Meters per step.
    pub speed: f64,
    pub collected: u32,
    pub nearby_old: u32,
}

impl Vessel {
    pub fn new(position: Vec2, heading: Vec2) -> Self {
        Self {
            position,
            heading,
            speed: 0.0,
            collected: 0,
            nearby_old: 0,
        }
    }
}

/// Steering and throttle update; returns the proposed new position without
/// moving the vessel. Steer 1 turns right (clockwise), 2 left.
pub fn steer_and_throttle(v: &mut Vessel, throttle: usize, steer: usize) -> Vec2 {
    match steer {
        1 => v.heading = v.heading.rotated_deg(-TURN_RATE),
        2 => v.heading = v.heading.rotated_deg(TURN_RATE),
        _ => {}
    }
    v.speed = SPEED_DECAY * v.speed + if throttle == 1 { ACCELERATION } else { 0.0 };
    v.position + v.heading * v.speed
}

pub fn lowest_count_reward(counts: &[u32]) -> f64 {
    counts.iter().copied().min().unwrap_or(0) as f64 * LOWEST_COUNT_FACTOR
}

/// Returns `(reward, new old-count)`.
pub fn nearby_trash_delta(old: u32, current: u32) -> (f64, u32) {
    ((current as f64 - old as f64).max(0.0), current)
}

pub fn crossed_border(p: Vec2) -> bool {
    p.x > HALF_EXTENT || p.x < -HALF_EXTENT || p.y > HALF_EXTENT || p.y < -HALF_EXTENT
}

pub fn close_to_vessel_reward(nearest: f64) -> f64 {
    if nearest <= CLOSE_TO_VESSEL_DISTANCE {
        CLOSE_TO_VESSEL_REWARD
    } else {
        0.0
    }
}

/// Floating trash with a spatial index.
#[derive(Debug, Clone)]
pub struct TrashField {
    pub pebbles: Vec<Vec2>,
    pub collected: Vec<bool>,
    index: SpatialGrid,
}

impl TrashField {
    pub fn new(pebbles: Vec<Vec2>) -> Self {
        let index = SpatialGrid::build(HALF_EXTENT + 50.0, 10.0, &pebbles);
        let collected = vec![false; pebbles.len()];
        Self {
            pebbles,
            collected,
            index,
        }
    }

    pub fn remaining(&self) -> usize {
        self.collected.iter().filter(|c| !**c).count()
    }

    /// Uncollected pebbles within `radius` (inclusive).
    pub fn count_within(&self, p: Vec2, radius: f64) -> u32 {
        let mut n = 0;
        self.index.for_each_near(p, radius, |id| {
            let i = id as usize;
            if !self.collected[i] && self.pebbles[i].distance(p) <= radius {
                n += 1;
            }
        });
        n
    }

    /// Marks and returns uncollected pebbles within `radius` of segment `a..b`.
    pub fn collect_along(&mut self, a: Vec2, b: Vec2, radius: f64) -> u32 {
        let mid = (a + b) * 0.5;
        let reach = a.distance(b) * 0.5 + radius;
        let mut hits = Vec::new();
        self.index.for_each_near(mid, reach, |id| {
            let i = id as usize;
            if !self.collected[i] && segment_distance(self.pebbles[i], a, b) <= radius {
                hits.push(i);
            }
        });
        for &i in &hits {
            self.collected[i] = true;
        }
        hits.len() as u32
    }
}

/// Vessel-centered, heading-aligned trash counts. Row index grows forward,
/// column index grows to the vessel's right; cell `(r, c)` is at
/// `out[r * 25 + c]`.
pub fn build_trash_grid(v: &Vessel, field: &TrashField, out: &mut [f32]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    let mut counts = [0u32; GRID_SIDE * GRID_SIDE];
    let half = GRID_SIDE as f64 * GRID_CELL / 2.0;
    let right = v.heading.right();
    field.index.for_each_near(v.position, half * std::f64::consts::SQRT_2, |id| {
        let i = id as usize;
        if field.collected[i] {
            return;
        }
        let d = field.pebbles[i] - v.position;
        if let Some((r, c)) = grid_cell(d.dot(v.heading), d.dot(right)) {
            counts[r * GRID_SIDE + c] += 1;
        }
    });
    for (o, c) in out.iter_mut().zip(counts) {
        *o = (c as f64 / GRID_CELL_CAP).min(1.0) as f32;
    }
}

/// Cell of a point given its forward and rightward offsets from the vessel.
pub fn grid_cell(forward: f64, rightward: f64) -> Option<(usize, usize)> {
    let center = GRID_SIDE as f64 / 2.0;
    let r = (forward / GRID_CELL + center).floor();
    let c = (rightward / GRID_CELL + center).floor();
    let side = GRID_SIDE as f64;
    (r >= 0.0 && r < side && c >= 0.0 && c < side).then_some((r as usize, c as usize))
}

pub struct OceanCleanup {
    spec: SpaceSpec,
    pub vessels: Vec<Vessel>,
    pub trash: TrashField,
    rng: rand_chacha::ChaCha8Rng,
}

impl OceanCleanup {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            spec: config.spec(),
            vessels: Vec::new(),
            trash: TrashField::new(Vec::new()),
            rng: stream(config.seed, StreamId::Dynamics),
        })
    }

    pub fn episode(config: &EnvConfig) -> Result<Episode<Self>> {
        Episode::new(Self::new(config)?, config.clone())
    }

    fn spawn_point(&mut self, avoid: &[Vec2]) -> Vec2 {
        let mut p = Vec2::ZERO;
        for _ in 0..1000 {
            p = Vec2::new(
                self.rng.random_range(-SPAWN_EXTENT..SPAWN_EXTENT),
                self.rng.random_range(-SPAWN_EXTENT..SPAWN_EXTENT),
            );
            if avoid.iter().all(|q| q.distance(p) > 4.0 * COLLISION_RADIUS) {
                break;
            }
        }
        p
    }

    fn respawn(&mut self, i: usize) {
        let others: Vec<Vec2> = self
            .vessels
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.position)
            .collect();
        let p = self.spawn_point(&others);
        let heading = Vec2::from_angle_deg(self.rng.random_range(-180.0..180.0));
        let v = &mut self.vessels[i];
        v.position = p;
        v.heading = heading;
        v.speed = 0.0;
        v.nearby_old = 0;
    }

    /// Nearest other vessel as `(index, distance)`.
    pub fn nearest_vessel(&self, i: usize) -> Option<(usize, f64)> {
        let p = self.vessels[i].position;
        self.vessels
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, v)| (j, v.position.distance(p)))
            .fold(None, |best, c| match best {
                Some((_, d)) if d <= c.1 => best,
                _ => Some(c),
            })
    }
}

impl Simulation for OceanCleanup {
    fn env_id(&self) -> EnvId {
        EnvId::Opc
    }

    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn regenerate(&mut self, seed: u64) {
        self.trash = TrashField::new(scatter_trash(seed, HALF_EXTENT).pebbles);
        self.rng = stream(derive_key(seed, "opc"), StreamId::Dynamics);
        self.vessels.clear();
        let mut placed = Vec::new();
        for _ in 0..self.spec.agent_count {
            let p = self.spawn_point(&placed);
            placed.push(p);
            let heading = Vec2::from_angle_deg(self.rng.random_range(-180.0..180.0));
            self.vessels.push(Vessel::new(p, heading));
        }
    }

    fn vector_frame(&self, agent: usize, out: &mut [f32]) {
        let v = &self.vessels[agent];
        let rel = self
            .nearest_vessel(agent)
            .map(|(j, _)| (self.vessels[j].position - v.position) * (1.0 / (2.0 * HALF_EXTENT)))
            .unwrap_or(Vec2::ZERO);
        let vals = [
            v.position.x / HALF_EXTENT,
            v.position.y / HALF_EXTENT,
            v.heading.x,
            v.heading.y,
            rel.x,
            rel.y,
        ];
        for (o, x) in out.iter_mut().zip(vals) {
            *o = (x as f32).clamp(-1.0, 1.0);
        }
    }

    fn visual_frame(&self, agent: usize, out: &mut [f32]) {
        build_trash_grid(&self.vessels[agent], &self.trash, out);
    }

    fn advance(&mut self, actions: &[AgentAction]) -> Tick {
        let n = self.vessels.len();
        let mut collected_now = vec![0u32; n];
        let mut collided = vec![false; n];
        let mut touched_trash = vec![false; n];
        // ascending id order: earlier vessels move first and claim pebbles
        for i in 0..n {
            let (throttle, steer) = (actions[i].discrete[0], actions[i].discrete[1]);
            let old = self.vessels[i].position;
            let proposed = steer_and_throttle(&mut self.vessels[i], throttle, steer);
            let hit = (0..n)
                .filter(|&j| j != i)
                .find(|&j| self.vessels[j].position.distance(proposed) < 2.0 * COLLISION_RADIUS);
            if let Some(j) = hit {
                collided[i] = true;
                collided[j] = true;
                self.vessels[i].speed = 0.0;
                continue;
            }
            self.vessels[i].position = proposed;
            let got = self.trash.collect_along(old, proposed, COLLECTION_RADIUS);
            collected_now[i] = got;
            touched_trash[i] = got > 0;
            self.vessels[i].collected += got;
        }
        let counts: Vec<u32> = self.vessels.iter().map(|v| v.collected).collect();
        let lowest = lowest_count_reward(&counts);
        let mut agent_done = vec![false; n];
        let mut breakdowns = Vec::with_capacity(n);
        for i in 0..n {
            let mut bd = RewardBreakdown::zeros(EnvId::Opc);
            bd.values[COLLECT_TRASH] = collected_now[i] as f64;
            bd.values[GLOBAL_LOWEST] = lowest;
            if collided[i] {
                bd.values[COLLIDED_VESSEL] = VESSEL_COLLISION_PENALTY;
            }
            if let Some((_, d)) = self.nearest_vessel(i) {
                bd.values[CLOSE_TO_VESSEL] = close_to_vessel_reward(d);
            }
            let current = self.trash.count_within(self.vessels[i].position, NEARBY_TRASH_RADIUS);
            let (delta, old) = nearby_trash_delta(self.vessels[i].nearby_old, current);
            bd.values[NEARBY_TRASH_DELTA] = delta;
            self.vessels[i].nearby_old = old;
            if touched_trash[i] {
                bd.values[COLLIDE_WITH_TRASH] = TRASH_CONTACT_PENALTY;
            }
            if crossed_border(self.vessels[i].position) {
                bd.values[CROSSED_BORDER] = BORDER_PENALTY;
                agent_done[i] = true;
            }
            breakdowns.push(bd);
        }
        for i in 0..n {
            if agent_done[i] {
                self.respawn(i);
            }
        }
        Tick {
            breakdowns,
            agent_done,
            terminal: false,
            metric: EnvMetric::new("local_reward", collected_now.iter().map(|&c| c as f64).collect()),
        }
    }
}
