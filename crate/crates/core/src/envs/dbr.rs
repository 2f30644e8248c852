//! Drone-based reforestation: drones carry seeds from a charging station
//! and drop them near existing forest.

use rand::Rng;

use crate::error::Result;
use crate::geom::{remap, SpatialGrid, Vec2};
use crate::rng::{derive_key, stream, StreamId};
use crate::sim::{AgentAction, EnvConfig, EnvId, EnvMetric, Episode, SpaceSpec, Simulation, Tick};
use crate::tasks::RewardBreakdown;
use crate::worldgen::{generate_terrain_with, scatter_forest, TerrainGrid, MAX_TERRAIN_HEIGHT};

pub const HALF_EXTENT: f64 = 200.0;
pub const EPISODE_LENGTH: f64 = 2000.0;
pub const SPEED: f64 = 2.0;
pub const CLIMB: f64 = 1.0;
pub const TURN_RATE: f64 = 6.0;
pub const MAX_ALTITUDE: f64 = 80.0;
pub const MIN_CLEARANCE: f64 = 0.5;
pub const STATION_HEIGHT: f64 = 5.0;
pub const DOT_MIN: f64 = 2.5;
pub const DOT_MAX: f64 = 75.0;
pub const SDRM: f64 = 20.0;
pub const DRM: f64 = 10.0;
pub const D_CHARGE: f64 = 7.5;
pub const RUN_BACK_STEP: f64 = 2.5;
pub const R_P: f64 = 20.0;
pub const GROUP_UP_DISTANCE: f64 = 5.0;
pub const GROUP_UP_REWARD: f64 = 10.0;
pub const CLOSE_TREE_RADIUS: f64 = 20.0;
pub const CLOSE_TREE_REWARD: f64 = 100.0;
pub const CAMERA_SIDE: usize = 16;
pub const CAMERA_CELL: f64 = 2.0;
/// Task index whose drones spawn away from the station without a seed.
pub const RANDOM_SPAWN_TASK: usize = 2;

pub const DROP_SEED: usize = 0;
pub const DEPLETE_HOLDING: usize = 1;
pub const DEPLETE_NO_SEED: usize = 2;
pub const PICK_UP_SEED: usize = 3;
pub const RUNNING_BACK: usize = 4;
pub const FERTILITY_DELTA: usize = 5;
pub const HEIGHT_DELTA: usize = 6;
pub const DISTANCE_DELTA: usize = 7;
pub const FIND_CLOSE_TREE: usize = 8;
pub const GROUP_UP: usize = 9;

/// Seed drop reward `(r_s, r_d, total)` from the distance to the nearest
/// existing tree (`det`), nearest dropped seed (`dnt`) and the drop
/// distance to the station (`sdd`). Use `f64::INFINITY` for "none".
pub fn drop_seed_reward(det: f64, dnt: f64, sdd: f64) -> (f64, f64, f64) {
    if !((DOT_MIN..=DOT_MAX).contains(&det) && dnt >= DOT_MIN) {
        return (0.0, 0.0, 0.0);
    }
    let r_s = remap(det, DOT_MIN, DOT_MAX, 1.0, 0.0) * SDRM;
    // drops beyond the half extent (diagonal corners) earn the full distance share
    let r_d = if r_s > 0.0 { (sdd / HALF_EXTENT).min(1.0) * DRM } else { 0.0 };
    (r_s, r_d, r_s + r_d)
}

pub fn energy_penalty(holding_seed: bool) -> f64 {
    if holding_seed {
        -1.0 / (EPISODE_LENGTH / 2.0)
    } else {
        -1.0 / EPISODE_LENGTH
    }
}

/// Reward for an improvement over `old`; returns `(reward, new old)`.
pub fn positive_delta(old: f64, new: f64) -> (f64, f64) {
    if new > old {
        (new - old, new)
    } else {
        (0.0, old)
    }
}

/// Seed drop potential at a location, 0 outside the drop condition.
pub fn fertility_potential(det: f64, dnt: f64) -> f64 {
    if (DOT_MIN..=DOT_MAX).contains(&det) && dnt >= DOT_MIN {
        remap(det, DOT_MIN, DOT_MAX, 1.0, 0.0)
    } else {
        0.0
    }
}

pub fn group_up_reward(nearest_drone: f64) -> f64 {
    if GROUP_UP_DISTANCE <= nearest_drone {
        0.0
    } else {
        GROUP_UP_REWARD
    }
}

/// State of the return leg after a drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunBack {
    pub r_s: f64,
    pub r_d: f64,
    /// Station distance at the drop.
    pub d_init: f64,
    /// Station distance in whole steps at the previous tick.
    pub d_prev: i64,
    /// Reward paid so far on this leg.
    pub paid: f64,
}

impl RunBack {
    pub fn new(r_s: f64, r_d: f64, d_init: f64) -> Self {
        Self {
            r_s,
            r_d,
            d_init,
            d_prev: (d_init / RUN_BACK_STEP).floor() as i64,
            paid: 0.0,
        }
    }

    pub fn multiplier(&self) -> f64 {
        (self.r_s + self.r_d) / (SDRM + DRM)
    }

    /// Reward per crossed increment.
    pub fn per_increment(&self) -> f64 {
        let increments = (self.d_init - D_CHARGE) / RUN_BACK_STEP;
        if increments <= 0.0 {
            return R_P * self.multiplier();
        }
        (R_P * self.multiplier() / increments).clamp(0.0, R_P)
    }

    /// Reward for moving to station distance `dist`; the leg total never
    /// exceeds `R_P`.
    pub fn step(&mut self, dist: f64) -> f64 {
        let d0 = (dist / RUN_BACK_STEP).floor() as i64;
        let mut r = 0.0;
        if d0 < self.d_prev {
            let crossed = (self.d_prev - d0) as f64;
            r = (crossed * self.per_increment()).min(R_P - self.paid).max(0.0);
            self.paid += r;
        }
        self.d_prev = d0;
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drone {
    pub position: Vec2,
    pub z: f64,
    pub heading: Vec2,
    pub climb: f64,
    pub holding_seed: bool,
    pub energy: f64,
    /// Furthest station distance reached on the current leg.
    pub furthest: f64,
    pub best_fertility: f64,
    pub best_height: f64,
    pub run_back: Option<RunBack>,
    pub found_tree: bool,
    pub recharges: u32,
}

pub struct Reforestation {
    spec: SpaceSpec,
    level: u32,
    task: usize,
    pub terrain: TerrainGrid,
    pub trees: Vec<Vec2>,
    tree_index: SpatialGrid,
    pub seeds: Vec<Vec2>,
    seed_index: SpatialGrid,
    pub station: Vec2,
    pub station_z: f64,
    pub drones: Vec<Drone>,
}

impl Reforestation {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            spec: config.spec(),
            level: config.scenario.unwrap_or(1),
            task: config.task,
            terrain: TerrainGrid::flat(HALF_EXTENT, 2),
            trees: Vec::new(),
            tree_index: SpatialGrid::new(HALF_EXTENT, 10.0),
            seeds: Vec::new(),
            seed_index: SpatialGrid::new(HALF_EXTENT, 10.0),
            station: Vec2::ZERO,
            station_z: 0.0,
            drones: Vec::new(),
        })
    }

    pub fn episode(config: &EnvConfig) -> Result<Episode<Self>> {
        Episode::new(Self::new(config)?, config.clone())
    }

    pub fn nearest_tree(&self, p: Vec2) -> f64 {
        self.tree_index
            .nearest(p, &self.trees, |_| true)
            .map_or(f64::INFINITY, |(_, d)| d)
    }

    pub fn nearest_seed(&self, p: Vec2) -> f64 {
        self.seed_index
            .nearest(p, &self.seeds, |_| true)
            .map_or(f64::INFINITY, |(_, d)| d)
    }

    /// Horizontal distance to the station.
    pub fn station_distance(&self, p: Vec2) -> f64 {
        p.distance(self.station)
    }

    fn station_distance_3d(&self, d: &Drone) -> f64 {
        let h = d.position.distance(self.station);
        (h * h + (d.z - self.station_z).powi(2)).sqrt()
    }

    pub fn add_tree(&mut self, p: Vec2) {
        self.tree_index.insert(self.trees.len() as u32, p);
        self.trees.push(p);
    }

    fn nearest_drone(&self, i: usize) -> f64 {
        let d = &self.drones[i];
        self.drones
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| (o.position.distance(d.position).powi(2) + (o.z - d.z).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    fn camera(&self, d: &Drone, out: &mut [f32]) {
        let right = d.heading.right();
        let center = CAMERA_SIDE as f64 / 2.0;
        let mut tree_cells = [false; CAMERA_SIDE * CAMERA_SIDE];
        let reach = CAMERA_SIDE as f64 * CAMERA_CELL;
        let mut mark = |p: Vec2| {
            let rel = p - d.position;
            let r = (rel.dot(d.heading) / CAMERA_CELL + center).floor();
            let c = (rel.dot(right) / CAMERA_CELL + center).floor();
            if (0.0..CAMERA_SIDE as f64).contains(&r) && (0.0..CAMERA_SIDE as f64).contains(&c) {
                tree_cells[r as usize * CAMERA_SIDE + c as usize] = true;
            }
        };
        self.tree_index.for_each_near(d.position, reach, |id| mark(self.trees[id as usize]));
        self.seed_index.for_each_near(d.position, reach, |id| mark(self.seeds[id as usize]));
        for r in 0..CAMERA_SIDE {
            for c in 0..CAMERA_SIDE {
                let f = (r as f64 + 0.5 - center) * CAMERA_CELL;
                let s = (c as f64 + 0.5 - center) * CAMERA_CELL;
                let p = d.position + d.heading * f + right * s;
                let h = self.terrain.height_at(p) / MAX_TERRAIN_HEIGHT;
                let t = if tree_cells[r * CAMERA_SIDE + c] { 1.0 } else { 0.0 };
                out[r * CAMERA_SIDE + c] = (0.5 * h + 0.5 * t).clamp(0.0, 1.0) as f32;
            }
        }
    }
}

impl Simulation for Reforestation {
    fn env_id(&self) -> EnvId {
        EnvId::Dbr
    }

    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn regenerate(&mut self, seed: u64) {
        self.terrain = generate_terrain_with(self.level, seed, HALF_EXTENT, 64).expect("level validated");
        let trees = scatter_forest(&self.terrain, seed, HALF_EXTENT);
        self.trees.clear();
        self.tree_index = SpatialGrid::new(HALF_EXTENT, 10.0);
        for t in trees {
            self.add_tree(t);
        }
        self.seeds.clear();
        self.seed_index = SpatialGrid::new(HALF_EXTENT, 10.0);
        self.station = Vec2::ZERO;
        self.station_z = self.terrain.height_at(self.station) + STATION_HEIGHT;
        let mut rng = stream(derive_key(seed, "dbr"), StreamId::Dynamics);
        let random_spawn = self.task == RANDOM_SPAWN_TASK;
        self.drones = (0..self.spec.agent_count)
            .map(|i| {
                let (position, holding) = if random_spawn {
                    let b = 0.8 * HALF_EXTENT;
                    (Vec2::new(rng.random_range(-b..b), rng.random_range(-b..b)), false)
                } else {
                    // spread around the station pad, inside the charge radius
                    let a = 360.0 * i as f64 / self.spec.agent_count as f64;
                    (Vec2::from_angle_deg(a) * 3.0, true)
                };
                let ground = self.terrain.height_at(position);
                let z = if random_spawn { ground + 10.0 } else { self.station_z };
                Drone {
                    position,
                    z: z.min(MAX_ALTITUDE),
                    heading: Vec2::from_angle_deg(rng.random_range(-180.0..180.0)),
                    climb: 0.0,
                    holding_seed: holding,
                    energy: 1.0,
                    furthest: 0.0,
                    best_fertility: 0.0,
                    best_height: 0.0,
                    run_back: None,
                    found_tree: false,
                    recharges: 0,
                }
            })
            .collect();
    }

    fn vector_frame(&self, agent: usize, out: &mut [f32]) {
        let d = &self.drones[agent];
        let ground = self.terrain.height_at(d.position);
        let dir = {
            let (x, y, z) = (d.heading.x, d.heading.y, d.climb);
            let n = (x * x + y * y + z * z).sqrt();
            [x / n, y / n, z / n]
        };
        let v = [
            (d.z - ground) / MAX_ALTITUDE,
            d.position.x / HALF_EXTENT,
            d.position.y / HALF_EXTENT,
            d.z / MAX_ALTITUDE,
            dir[0],
            dir[1],
            dir[2],
            (self.station_z - d.z) / MAX_ALTITUDE,
            if d.holding_seed { 1.0 } else { 0.0 },
            d.energy,
        ];
        for (o, x) in out.iter_mut().zip(v) {
            *o = (x as f32).clamp(-1.0, 1.0);
        }
    }

    fn visual_frame(&self, agent: usize, out: &mut [f32]) {
        self.camera(&self.drones[agent], out);
    }

    fn advance(&mut self, actions: &[AgentAction]) -> Tick {
        let n = self.drones.len();
        let mut breakdowns: Vec<RewardBreakdown> = (0..n).map(|_| RewardBreakdown::zeros(EnvId::Dbr)).collect();
        for i in 0..n {
            let act = &actions[i];
            let (throttle, steer, lift) = (act.continuous[0], act.continuous[1], act.continuous[2]);
            let bd = &mut breakdowns[i];
            // motion
            {
                let terrain = &self.terrain;
                let d = &mut self.drones[i];
                if d.energy > 0.0 {
                    d.heading = d.heading.rotated_deg(steer * TURN_RATE);
                    let lim = HALF_EXTENT - 0.5;
                    let p = d.position + d.heading * (throttle * SPEED);
                    d.position = Vec2::new(p.x.clamp(-lim, lim), p.y.clamp(-lim, lim));
                    d.climb = lift;
                    d.z += lift * CLIMB;
                }
                let ground = terrain.height_at(d.position);
                d.z = d.z.clamp(ground + MIN_CLEARANCE, MAX_ALTITUDE.max(ground + MIN_CLEARANCE));
            }
            // energy
            let holding = self.drones[i].holding_seed;
            let penalty = energy_penalty(holding);
            bd.values[if holding { DEPLETE_HOLDING } else { DEPLETE_NO_SEED }] = penalty;
            {
                let d = &mut self.drones[i];
                d.energy = (d.energy + penalty).max(0.0);
            }
            // seed drop
            if act.discrete[0] == 1 && self.drones[i].holding_seed {
                let p = self.drones[i].position;
                let det = self.nearest_tree(p);
                let dnt = self.nearest_seed(p);
                let sdd = self.station_distance(p);
                let (r_s, r_d, total) = drop_seed_reward(det, dnt, sdd);
                bd.values[DROP_SEED] = total;
                self.seed_index.insert(self.seeds.len() as u32, p);
                self.seeds.push(p);
                let d_init = self.station_distance(p);
                let d = &mut self.drones[i];
                d.holding_seed = false;
                d.run_back = Some(RunBack::new(r_s, r_d, d_init));
            }
            let p = self.drones[i].position;
            let dist = self.station_distance(p);
            // return leg
            if let Some(rb) = self.drones[i].run_back.as_mut() {
                bd.values[RUNNING_BACK] = rb.step(dist);
            }
            // exploration deltas
            let det = self.nearest_tree(p);
            let dnt = self.nearest_seed(p);
            let height = self.terrain.height_at(p);
            {
                let d = &mut self.drones[i];
                let (r, v) = positive_delta(d.best_fertility, fertility_potential(det, dnt));
                bd.values[FERTILITY_DELTA] = r;
                d.best_fertility = v;
                let (r, v) = positive_delta(d.best_height, height);
                bd.values[HEIGHT_DELTA] = r;
                d.best_height = v;
                let (r, v) = positive_delta(d.furthest, dist.min(HALF_EXTENT));
                bd.values[DISTANCE_DELTA] = r;
                d.furthest = v;
                if !d.found_tree && det <= CLOSE_TREE_RADIUS {
                    d.found_tree = true;
                    bd.values[FIND_CLOSE_TREE] = CLOSE_TREE_REWARD;
                }
            }
            // station: recharge, and pick up a seed when arriving without one
            let at_station = self.station_distance_3d(&self.drones[i]) <= D_CHARGE;
            let d = &mut self.drones[i];
            if at_station {
                d.energy = 1.0;
                if !d.holding_seed {
                    d.holding_seed = true;
                    d.recharges += 1;
                    bd.values[PICK_UP_SEED] = 1.0;
                    bd.passthrough = d.furthest;
                    d.furthest = 0.0;
                    d.run_back = None;
                }
            }
        }
        for i in 0..n {
            breakdowns[i].values[GROUP_UP] = group_up_reward(self.nearest_drone(i));
        }
        Tick {
            breakdowns,
            agent_done: vec![false; n],
            terminal: false,
            metric: EnvMetric::new("recharge_count", self.drones.iter().map(|d| d.recharges as f64).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drop_reward_examples() {
        assert_eq!(drop_seed_reward(2.5, 5.0, 200.0), (20.0, 10.0, 30.0));
        assert_eq!(drop_seed_reward(75.0, 5.0, 200.0), (0.0, 0.0, 0.0));
        let (rs, rd, t) = drop_seed_reward(38.75, 5.0, 100.0);
        assert!((rs - 10.0).abs() < 1e-12 && (rd - 5.0).abs() < 1e-12 && (t - 15.0).abs() < 1e-12);
        assert_eq!(drop_seed_reward(f64::INFINITY, f64::INFINITY, 10.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn run_back_pays_twenty_over_fifty_meters() {
        let mut rb = RunBack::new(20.0, 10.0, 57.5);
        assert_eq!(rb.multiplier(), 1.0);
        assert!((rb.per_increment() - 1.0).abs() < 1e-12);
        let mut total = 0.0;
        let mut dist: f64 = 57.5;
        while dist > 0.0 {
            dist -= 0.5;
            total += rb.step(dist.max(0.0));
        }
        assert!((total - 20.0).abs() < 1e-9);
    }

    #[test]
    fn run_back_moving_away_pays_nothing() {
        let mut rb = RunBack::new(20.0, 10.0, 57.5);
        assert_eq!(rb.step(60.0), 0.0);
        assert_eq!(rb.step(70.0), 0.0);
    }
}
