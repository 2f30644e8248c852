//! Aerial wildfire suppression: planes scoop water from the sea around an
//! island and drop it on a spreading forest fire.

use rand::Rng;

use crate::error::Result;
use crate::geom::{SpatialGrid, Vec2};
use crate::rng::{derive_key, stream, StreamId};
use crate::sim::{AgentAction, EnvConfig, EnvId, EnvMetric, Episode, SpaceSpec, Simulation, Tick};
use crate::tasks::RewardBreakdown;
use crate::worldgen::{generate_terrain_with, scatter_forest, FieldKind, ScalarField};

/// Environment half extent; crossing it ends the agent's episode.
pub const ENV_HALF: f64 = 750.0;
/// Island half extent; the water girdle lies between this and `ENV_HALF`.
pub const ISLAND_HALF: f64 = 600.0;
pub const VILLAGE_RADIUS: f64 = 150.0;
pub const SPEED: f64 = 6.0;
pub const TURN_RATE: f64 = 5.0;
pub const IGNITION_RADIUS: f64 = 15.0;
pub const BASE_IGNITION: f64 = 0.15;
pub const BURN_STEPS: u32 = 60;
pub const DRY_STEPS: u32 = 120;
pub const DROP_RADIUS: f64 = 20.0;
pub const FIND_RADIUS: f64 = 150.0;
pub const BORDER_PENALTY: f64 = -100.0;
pub const PICK_UP_REWARD: f64 = 1.0;
pub const FIRE_OUT_REWARD: f64 = 10.0;
pub const VILLAGE_PENALTY: f64 = -50.0;
pub const BURNING_STEP_PENALTY: f64 = -0.01;
pub const FIND_REWARD: f64 = 100.0;
pub const EXTINGUISH_REWARD: f64 = 5.0;
pub const PREPARE_REWARD: f64 = 1.0;
pub const CAMERA_SIDE: usize = 42;
pub const CAMERA_CELL: f64 = 10.0;
/// Normalization of the nearest-tree offset observation.
pub const TREE_OFFSET_SCALE: f64 = 150.0;
/// Trees within this distance of the village center are cleared.
const VILLAGE_CLEARING: f64 = 40.0;

pub const CROSSED_BORDER: usize = 0;
pub const PICK_UP_WATER: usize = 1;
pub const FIRE_OUT: usize = 2;
pub const TOO_CLOSE_VILLAGE: usize = 3;
pub const TIME_STEP_BURNING: usize = 4;
pub const FIND_FIRE: usize = 5;
pub const FIND_VILLAGE: usize = 6;
pub const EXTINGUISHING: usize = 7;
pub const PREPARING: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeState {
    Alive,
    Burning,
    Extinguished,
    Wet,
    Burned,
}

impl TreeState {
    /// Whether the transition `self -> next` is allowed.
    pub fn can_become(self, next: TreeState) -> bool {
        use TreeState::*;
        self == next
            || matches!(
                (self, next),
                (Alive, Burning) | (Alive, Wet) | (Wet, Alive) | (Burning, Extinguished) | (Burning, Burned)
            )
    }

    pub fn is_standing(self) -> bool {
        matches!(self, TreeState::Alive | TreeState::Wet | TreeState::Burning)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tree {
    pub position: Vec2,
    pub state: TreeState,
    /// Steps left burning or drying.
    pub timer: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub position: Vec2,
    pub heading: Vec2,
    pub holding_water: bool,
    pub found_fire: bool,
    pub found_village: bool,
    pub extinguish_total: f64,
}

pub fn in_water_girdle(p: Vec2) -> bool {
    let outside_island = p.x > ISLAND_HALF || p.x < -ISLAND_HALF || p.y > ISLAND_HALF || p.y < -ISLAND_HALF;
    outside_island && !crossed_border(p)
}

pub fn crossed_border(p: Vec2) -> bool {
    p.x > ENV_HALF || p.x < -ENV_HALF || p.y > ENV_HALF || p.y < -ENV_HALF
}

/// Applies a water drop to the given trees; returns
/// `(extinguished, prepared, reward)`.
pub fn drop_water(trees: &mut [Tree], in_radius: &[usize]) -> (u32, u32, f64) {
    let (mut ext, mut prep) = (0, 0);
    for &i in in_radius {
        let t = &mut trees[i];
        match t.state {
            TreeState::Burning => {
                t.state = TreeState::Extinguished;
                t.timer = 0;
                ext += 1;
            }
            TreeState::Alive => {
                t.state = TreeState::Wet;
                t.timer = DRY_STEPS;
                prep += 1;
            }
            TreeState::Wet => t.timer = DRY_STEPS,
            _ => {}
        }
    }
    (ext, prep, EXTINGUISH_REWARD * ext as f64 + PREPARE_REWARD * prep as f64)
}

pub struct FireSuppression {
    spec: SpaceSpec,
    level: u32,
    pub trees: Vec<Tree>,
    positions: Vec<Vec2>,
    index: SpatialGrid,
    pub burning: Vec<u32>,
    pub village: Vec2,
    pub planes: Vec<Plane>,
    pub wind: ScalarField,
    pub temperature: ScalarField,
    pub humidity: ScalarField,
    pub fire_out_paid: bool,
    pub t: u64,
    rng: rand_chacha::ChaCha8Rng,
}

impl FireSuppression {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            spec: config.spec(),
            level: config.scenario.unwrap_or(1),
            trees: Vec::new(),
            positions: Vec::new(),
            index: SpatialGrid::new(ENV_HALF, 20.0),
            burning: Vec::new(),
            village: Vec2::ZERO,
            planes: Vec::new(),
            wind: ScalarField::new(FieldKind::WindDirection, config.seed, ENV_HALF),
            temperature: ScalarField::new(FieldKind::Temperature, config.seed, ENV_HALF),
            humidity: ScalarField::new(FieldKind::Humidity, config.seed, ENV_HALF),
            fire_out_paid: false,
            t: 0,
            rng: stream(config.seed, StreamId::Dynamics),
        })
    }

    pub fn episode(config: &EnvConfig) -> Result<Episode<Self>> {
        Episode::new(Self::new(config)?, config.clone())
    }

    /// Replaces the forest (scripted scenarios).
    pub fn set_trees(&mut self, trees: Vec<Tree>) {
        self.positions = trees.iter().map(|t| t.position).collect();
        self.index = SpatialGrid::build(ENV_HALF, 20.0, &self.positions);
        self.burning = trees
            .iter()
            .enumerate()
            .filter(|(_, t)| t.state == TreeState::Burning)
            .map(|(i, _)| i as u32)
            .collect();
        self.trees = trees;
    }

    pub fn trees_within(&self, p: Vec2, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.index.for_each_near(p, radius, |id| {
            if self.positions[id as usize].distance(p) <= radius {
                out.push(id as usize);
            }
        });
        out.sort_unstable();
        out
    }

    pub fn nearest_standing_tree(&self, p: Vec2) -> Option<(usize, f64)> {
        self.index
            .nearest(p, &self.positions, |id| self.trees[id as usize].state.is_standing())
            .map(|(i, d)| (i as usize, d))
    }

    fn spawn_plane(&mut self) -> Plane {
        let b = 0.6 * ISLAND_HALF;
        Plane {
            position: Vec2::new(self.rng.random_range(-b..b), self.rng.random_range(-b..b)),
            heading: Vec2::from_angle_deg(self.rng.random_range(-180.0..180.0)),
            holding_water: false,
            found_fire: false,
            found_village: false,
            extinguish_total: 0.0,
        }
    }

    fn ignite(&mut self, i: usize) {
        let t = &mut self.trees[i];
        if t.state == TreeState::Alive {
            t.state = TreeState::Burning;
            t.timer = BURN_STEPS;
            self.burning.push(i as u32);
        }
    }

    /// One fire spread tick: ignitions from currently burning trees, then
    /// burn-out and dry-out timers.
    pub fn fire_step(&mut self) {
        let t = self.t as f64;
        let mut ignite = Vec::new();
        for &b in &self.burning {
            let b = b as usize;
            if self.trees[b].state != TreeState::Burning {
                continue;
            }
            let src = self.positions[b];
            let heat = (1.0 + self.temperature.sample(src, t) - self.humidity.sample(src, t)).max(0.0);
            let downwind = -self.wind.direction(src, t);
            self.index.for_each_near(src, IGNITION_RADIUS, |id| {
                let j = id as usize;
                if j == b || self.trees[j].state != TreeState::Alive {
                    return;
                }
                let d = self.positions[j] - src;
                let dist = d.norm();
                if dist > IGNITION_RADIUS || dist == 0.0 {
                    return;
                }
                let bias = 1.0 + 0.5 * d.dot(downwind) / dist;
                ignite.push((j, BASE_IGNITION * heat * bias));
            });
        }
        // candidates visited in bucket order; draw in a canonical order
        ignite.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for (j, p) in ignite {
            if self.rng.random::<f64>() < p {
                self.ignite(j);
            }
        }
        let mut still = Vec::with_capacity(self.burning.len());
        for &b in &self.burning {
            let tr = &mut self.trees[b as usize];
            if tr.state != TreeState::Burning {
                continue;
            }
            tr.timer = tr.timer.saturating_sub(1);
            if tr.timer == 0 {
                tr.state = TreeState::Burned;
            } else {
                still.push(b);
            }
        }
        still.sort_unstable();
        still.dedup();
        self.burning = still;
        for tr in self.trees.iter_mut().filter(|t| t.state == TreeState::Wet) {
            tr.timer = tr.timer.saturating_sub(1);
            if tr.timer == 0 {
                tr.state = TreeState::Alive;
            }
        }
    }

    pub fn any_burning(&self) -> bool {
        !self.burning.is_empty()
    }

    pub fn burning_near_village(&self) -> bool {
        self.burning
            .iter()
            .any(|&b| self.positions[b as usize].distance(self.village) <= VILLAGE_RADIUS)
    }

    fn camera(&self, pl: &Plane, out: &mut [f32]) {
        let right = pl.heading.right();
        let center = CAMERA_SIDE as f64 / 2.0;
        let cells = CAMERA_SIDE * CAMERA_SIDE;
        let mut fire = vec![0u8; cells];
        let mut veg = vec![0u8; cells];
        let mut wet = vec![false; cells];
        let reach = CAMERA_SIDE as f64 * CAMERA_CELL * 0.75;
        self.index.for_each_near(pl.position, reach, |id| {
            let rel = self.positions[id as usize] - pl.position;
            let r = (rel.dot(pl.heading) / CAMERA_CELL + center).floor();
            let c = (rel.dot(right) / CAMERA_CELL + center).floor();
            let side = CAMERA_SIDE as f64;
            if !(0.0..side).contains(&r) || !(0.0..side).contains(&c) {
                return;
            }
            let k = r as usize * CAMERA_SIDE + c as usize;
            match self.trees[id as usize].state {
                TreeState::Burning => fire[k] = fire[k].saturating_add(1),
                TreeState::Alive => veg[k] = veg[k].saturating_add(1),
                TreeState::Wet => {
                    veg[k] = veg[k].saturating_add(1);
                    wet[k] = true;
                }
                _ => {}
            }
        });
        for r in 0..CAMERA_SIDE {
            for c in 0..CAMERA_SIDE {
                let k = r * CAMERA_SIDE + c;
                let f = (r as f64 + 0.5 - center) * CAMERA_CELL;
                let s = (c as f64 + 0.5 - center) * CAMERA_CELL;
                let p = pl.position + pl.heading * f + right * s;
                let water = p.x.abs() > ISLAND_HALF || p.y.abs() > ISLAND_HALF;
                out[k * 3] = (fire[k] as f32 / 2.0).min(1.0);
                out[k * 3 + 1] = (veg[k] as f32 / 2.0).min(1.0);
                out[k * 3 + 2] = if water || wet[k] { 1.0 } else { 0.0 };
            }
        }
    }
}

impl Simulation for FireSuppression {
    fn env_id(&self) -> EnvId {
        EnvId::Aws
    }

    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn regenerate(&mut self, seed: u64) {
        let terrain = generate_terrain_with(self.level, seed, ISLAND_HALF, 64).expect("level validated");
        self.rng = stream(derive_key(seed, "aws"), StreamId::Dynamics);
        let vb = 0.6 * ISLAND_HALF;
        self.village = Vec2::new(self.rng.random_range(-vb..vb), self.rng.random_range(-vb..vb));
        let village = self.village;
        let trees: Vec<Tree> = scatter_forest(&terrain, seed, ISLAND_HALF)
            .into_iter()
            .filter(|p| p.distance(village) > VILLAGE_CLEARING)
            .map(|position| Tree {
                position,
                state: TreeState::Alive,
                timer: 0,
            })
            .collect();
        self.set_trees(trees);
        self.wind = ScalarField::new(FieldKind::WindDirection, seed, ENV_HALF);
        self.temperature = ScalarField::new(FieldKind::Temperature, seed, ENV_HALF);
        self.humidity = ScalarField::new(FieldKind::Humidity, seed, ENV_HALF);
        self.fire_out_paid = false;
        self.t = 0;
        if !self.trees.is_empty() {
            // keep the first fire away from the village
            let mut pick = self.rng.random_range(0..self.trees.len());
            for _ in 0..32 {
                if self.positions[pick].distance(village) > 2.0 * VILLAGE_RADIUS {
                    break;
                }
                pick = self.rng.random_range(0..self.trees.len());
            }
            self.ignite(pick);
        }
        self.planes = (0..self.spec.agent_count).map(|_| self.spawn_plane()).collect();
    }

    fn vector_frame(&self, agent: usize, out: &mut [f32]) {
        let pl = &self.planes[agent];
        let (rel, burning) = match self.nearest_standing_tree(pl.position) {
            Some((i, _)) => (
                (self.positions[i] - pl.position) * (1.0 / TREE_OFFSET_SCALE),
                self.trees[i].state == TreeState::Burning,
            ),
            None => (Vec2::ZERO, false),
        };
        let v = [
            pl.position.x / ENV_HALF,
            pl.position.y / ENV_HALF,
            pl.heading.x,
            pl.heading.y,
            if pl.holding_water { 1.0 } else { 0.0 },
            rel.x,
            rel.y,
            if burning { 1.0 } else { 0.0 },
        ];
        for (o, x) in out.iter_mut().zip(v) {
            *o = (x as f32).clamp(-1.0, 1.0);
        }
    }

    fn visual_frame(&self, agent: usize, out: &mut [f32]) {
        self.camera(&self.planes[agent], out);
    }

    fn advance(&mut self, actions: &[AgentAction]) -> Tick {
        let n = self.planes.len();
        let mut breakdowns: Vec<RewardBreakdown> = (0..n).map(|_| RewardBreakdown::zeros(EnvId::Aws)).collect();
        let mut agent_done = vec![false; n];
        for i in 0..n {
            let steer = actions[i].continuous[0];
            let drop = actions[i].discrete[0] == 1;
            let bd = &mut breakdowns[i];
            {
                let pl = &mut self.planes[i];
                pl.heading = pl.heading.rotated_deg(steer * TURN_RATE);
                pl.position += pl.heading * SPEED;
            }
            let pos = self.planes[i].position;
            if crossed_border(pos) {
                bd.values[CROSSED_BORDER] = BORDER_PENALTY;
                agent_done[i] = true;
                continue;
            }
            if drop && self.planes[i].holding_water {
                let hit = self.trees_within(pos, DROP_RADIUS);
                let (ext, prep, _) = drop_water(&mut self.trees, &hit);
                bd.values[EXTINGUISHING] = EXTINGUISH_REWARD * ext as f64;
                bd.values[PREPARING] = PREPARE_REWARD * prep as f64;
                let pl = &mut self.planes[i];
                pl.holding_water = false;
                pl.extinguish_total += EXTINGUISH_REWARD * ext as f64;
            } else if !self.planes[i].holding_water && in_water_girdle(pos) {
                self.planes[i].holding_water = true;
                bd.values[PICK_UP_WATER] = PICK_UP_REWARD;
            }
        }
        self.burning.retain(|&b| self.trees[b as usize].state == TreeState::Burning);
        self.t += 1;
        self.fire_step();

        let burning = self.any_burning();
        let fire_out = !burning && !self.fire_out_paid;
        if fire_out {
            self.fire_out_paid = true;
        }
        let near_village = self.burning_near_village();
        for i in 0..n {
            let bd = &mut breakdowns[i];
            if fire_out {
                bd.values[FIRE_OUT] = FIRE_OUT_REWARD;
            }
            if near_village {
                bd.values[TOO_CLOSE_VILLAGE] = VILLAGE_PENALTY;
            }
            if burning {
                bd.values[TIME_STEP_BURNING] = BURNING_STEP_PENALTY;
            }
            if agent_done[i] {
                continue;
            }
            let pos = self.planes[i].position;
            if !self.planes[i].found_fire {
                let found = self
                    .burning
                    .iter()
                    .any(|&b| self.positions[b as usize].distance(pos) < FIND_RADIUS);
                if found {
                    self.planes[i].found_fire = true;
                    bd.values[FIND_FIRE] = FIND_REWARD;
                }
            }
            if !self.planes[i].found_village && pos.distance(self.village) <= FIND_RADIUS {
                self.planes[i].found_village = true;
                bd.values[FIND_VILLAGE] = FIND_REWARD;
            }
        }
        for i in 0..n {
            if agent_done[i] {
                let keep = self.planes[i].clone();
                let mut fresh = self.spawn_plane();
                fresh.found_fire = keep.found_fire;
                fresh.found_village = keep.found_village;
                fresh.extinguish_total = keep.extinguish_total;
                self.planes[i] = fresh;
            }
        }
        Tick {
            breakdowns,
            agent_done,
            terminal: false,
            metric: EnvMetric::new(
                "extinguishing_trees_reward",
                self.planes.iter().map(|p| p.extinguish_total).collect(),
            ),
        }
    }
}
