//! Wildfire resource management: watchtower agents shift resources toward
//! approaching fire fronts.

use rand::Rng;

use crate::error::Result;
use crate::geom::Vec2;
use crate::rng::{derive_key, stream, StreamId};
use crate::sim::{AgentAction, EnvConfig, EnvId, EnvMetric, Episode, SpaceSpec, Simulation, Tick};
use crate::tasks::RewardBreakdown;
use crate::worldgen::{generate_terrain_with, FieldKind, ScalarField, TerrainGrid, MAX_TERRAIN_HEIGHT};

pub const HALF_EXTENT: f64 = 600.0;
pub const TOWER_SPACING: f64 = 250.0;
pub const D_THRESH: f64 = 200.0;
pub const POWER_LAW_S: f64 = 270.0;
pub const POWER_LAW_A: f64 = 5.0;
/// Fires farther than this are not observed.
pub const DETECTION_RADIUS: f64 = 600.0;
/// Resources move in tenths; the ledger counts integer tenths.
pub const UNITS_PER_AGENT: u32 = 10;
/// Bonus per supplied neighbour whose performance exceeds 0.5.
pub const USEFUL_BONUS: f64 = 0.1;
pub const FIRE_BASE_SPEED: f64 = 2.0;
/// Weight of the wind direction in the fire heading (rest points at the map center).
pub const FIRE_WIND_WEIGHT: f64 = 0.4;

pub const WATCH_TOWER: usize = 0;
pub const NEIGHBOURHOOD: usize = 1;
pub const COLLECTIVE: usize = 2;

/// Broken-power-law tower performance from the previous (`d0`) and
/// current (`d1`) closest-fire distance. Pass `f64::INFINITY` when no fire
/// is observed.
pub fn tower_performance(d0: f64, d1: f64) -> f64 {
    let d1n = (d1 / D_THRESH).min(1.0);
    let approaching = d1 < d0;
    let d1p = if approaching { 0.5 - 0.5 * d1n } else { 0.5 + 0.5 * d1n };
    (1.0 + (d1p * 1000.0 / POWER_LAW_S).powf(POWER_LAW_A)).powf(-0.5)
}

/// Own-tower reward: performance weighted by the squared resources the
/// agent supplies to itself.
pub fn self_reward(performance: f64, r_supporting: f64) -> f64 {
    performance * r_supporting * r_supporting
}

pub fn neighbour_reward(neighbour_performances: &[f64]) -> f64 {
    neighbour_performances.iter().sum()
}

pub fn collective_reward(performances: &[f64]) -> f64 {
    let n = performances.len().max(1) as f64;
    let mse = performances.iter().map(|p| p * p).sum::<f64>() / n;
    1.0 - (1.0 - mse.sqrt()).abs()
}

/// East, west and south lattice neighbours with wraparound on a 3x3 grid.
pub fn neighbours(tower: usize) -> [usize; 3] {
    let (r, c) = (tower / 3, tower % 3);
    [r * 3 + (c + 1) % 3, r * 3 + (c + 2) % 3, ((r + 1) % 3) * 3 + c]
}

/// Resource bookkeeping in integer tenths. Every agent owns
/// `UNITS_PER_AGENT` units split between its pool and its contributions to
/// its own tower and its three neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceLedger {
    pub pools: Vec<u32>,
    /// `contrib[agent][tower]`
    pub contrib: Vec<Vec<u32>>,
}

impl ResourceLedger {
    /// Every tower starts holding its own agent's full unit of resources.
    pub fn new(towers: usize) -> Self {
        let mut contrib = vec![vec![0; towers]; towers];
        for (a, row) in contrib.iter_mut().enumerate() {
            row[a] = UNITS_PER_AGENT;
        }
        Self {
            pools: vec![0; towers],
            contrib,
        }
    }

    /// Branch `b` targets self (0) or neighbour `b - 1`. Action 1 adds a
    /// tenth from the pool, 2 withdraws one of the agent's own tenths back
    /// to the pool. Impossible moves are no-ops.
    pub fn apply(&mut self, agent: usize, branches: &[usize]) {
        let nb = neighbours(agent);
        for (b, &act) in branches.iter().enumerate() {
            let target = if b == 0 { agent } else { nb[b - 1] };
            match act {
                1 if self.pools[agent] > 0 => {
                    self.pools[agent] -= 1;
                    self.contrib[agent][target] += 1;
                }
                2 if self.contrib[agent][target] > 0 => {
                    self.contrib[agent][target] -= 1;
                    self.pools[agent] += 1;
                }
                _ => {}
            }
        }
    }

    /// Resources held at `tower`, in resource units.
    pub fn tower_total(&self, tower: usize) -> f64 {
        self.contrib.iter().map(|row| row[tower]).sum::<u32>() as f64 / UNITS_PER_AGENT as f64
    }

    pub fn supplied(&self, agent: usize, tower: usize) -> f64 {
        self.contrib[agent][tower] as f64 / UNITS_PER_AGENT as f64
    }

    pub fn pool(&self, agent: usize) -> f64 {
        self.pools[agent] as f64 / UNITS_PER_AGENT as f64
    }

    /// Σ tower resources + Σ pools, in tenths.
    pub fn total_units(&self) -> u64 {
        self.pools.iter().map(|&p| p as u64).sum::<u64>()
            + self.contrib.iter().flatten().map(|&c| c as u64).sum::<u64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FireFront {
    pub position: Vec2,
    pub heading: Vec2,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Watchtower {
    pub position: Vec2,
    pub z: f64,
    /// Closest observed fire distance at the previous step.
    pub last_fire_distance: f64,
    pub performance: f64,
}

pub struct Watchtowers {
    spec: SpaceSpec,
    level: u32,
    pub terrain: TerrainGrid,
    pub towers: Vec<Watchtower>,
    pub ledger: ResourceLedger,
    pub fire: FireFront,
    pub wind: ScalarField,
    pub temperature: ScalarField,
    pub humidity: ScalarField,
    pub overcast: ScalarField,
    pub t: u64,
    rng: rand_chacha::ChaCha8Rng,
}

impl Watchtowers {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.spec();
        let level = config.scenario.unwrap_or(1);
        let n = spec.agent_count;
        Ok(Self {
            spec,
            level,
            terrain: TerrainGrid::flat(HALF_EXTENT, 2),
            towers: Vec::new(),
            ledger: ResourceLedger::new(n),
            fire: FireFront {
                position: Vec2::ZERO,
                heading: Vec2::new(1.0, 0.0),
                intensity: 0.0,
            },
            wind: ScalarField::new(FieldKind::WindDirection, config.seed, HALF_EXTENT),
            temperature: ScalarField::new(FieldKind::Temperature, config.seed, HALF_EXTENT),
            humidity: ScalarField::new(FieldKind::Humidity, config.seed, HALF_EXTENT),
            overcast: ScalarField::new(FieldKind::Overcast, config.seed, HALF_EXTENT),
            t: 0,
            rng: stream(config.seed, StreamId::Dynamics),
        })
    }

    pub fn episode(config: &EnvConfig) -> Result<Episode<Self>> {
        Episode::new(Self::new(config)?, config.clone())
    }

    fn spawn_fire(&mut self) {
        let side = self.rng.random_range(0..4);
        let along = self.rng.random_range(-HALF_EXTENT..HALF_EXTENT);
        let edge = HALF_EXTENT - 1.0;
        let position = match side {
            0 => Vec2::new(-edge, along),
            1 => Vec2::new(edge, along),
            2 => Vec2::new(along, -edge),
            _ => Vec2::new(along, edge),
        };
        self.fire = FireFront {
            position,
            heading: self.fire_heading(position),
            intensity: 0.1,
        };
    }

    fn fire_heading(&self, pos: Vec2) -> Vec2 {
        let to_center = (-pos).normalized().unwrap_or(Vec2::new(1.0, 0.0));
        // wind field stores where the wind comes from; fire travels downwind
        let downwind = -self.wind.direction(pos, self.t as f64);
        (to_center * (1.0 - FIRE_WIND_WEIGHT) + downwind * FIRE_WIND_WEIGHT)
            .normalized()
            .unwrap_or(to_center)
    }

    /// Fire speed in meters per step at `pos`.
    pub fn fire_speed(&self, pos: Vec2) -> f64 {
        let t = self.t as f64;
        let temp = self.temperature.sample(pos, t);
        let hum = self.humidity.sample(pos, t);
        let over = self.overcast.sample(pos, t);
        (FIRE_BASE_SPEED * (1.0 + temp - hum - 0.5 * over)).max(0.0)
    }

    fn fire_z(&self) -> f64 {
        self.terrain.height_at(self.fire.position)
    }

    /// Distance from tower `i` to the fire if it is within detection range.
    pub fn observed_fire_distance(&self, i: usize) -> Option<f64> {
        let tw = &self.towers[i];
        let dz = self.fire_z() - tw.z;
        let d = (tw.position.distance(self.fire.position).powi(2) + dz * dz).sqrt();
        (d <= DETECTION_RADIUS).then_some(d)
    }

    fn advance_fire(&mut self) {
        let speed = self.fire_speed(self.fire.position);
        self.fire.heading = self.fire_heading(self.fire.position);
        self.fire.position += self.fire.heading * speed;
        self.fire.intensity = (self.fire.intensity + 0.002).min(1.0);
        let p = self.fire.position;
        if p.x.abs() > HALF_EXTENT || p.y.abs() > HALF_EXTENT {
            self.spawn_fire();
        }
    }
}

impl Simulation for Watchtowers {
    fn env_id(&self) -> EnvId {
        EnvId::Wrm
    }

    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn regenerate(&mut self, seed: u64) {
        self.terrain = generate_terrain_with(self.level, seed, HALF_EXTENT, 64).expect("level validated");
        self.wind = ScalarField::new(FieldKind::WindDirection, seed, HALF_EXTENT);
        self.temperature = ScalarField::new(FieldKind::Temperature, seed, HALF_EXTENT);
        self.humidity = ScalarField::new(FieldKind::Humidity, seed, HALF_EXTENT);
        self.overcast = ScalarField::new(FieldKind::Overcast, seed, HALF_EXTENT);
        self.rng = stream(derive_key(seed, "wrm"), StreamId::Dynamics);
        self.t = 0;
        let n = self.spec.agent_count;
        self.towers = (0..n)
            .map(|i| {
                let p = Vec2::new(
                    ((i % 3) as f64 - 1.0) * TOWER_SPACING,
                    (1.0 - (i / 3) as f64) * TOWER_SPACING,
                );
                Watchtower {
                    position: p,
                    z: self.terrain.height_at(p),
                    last_fire_distance: f64::INFINITY,
                    performance: 0.0,
                }
            })
            .collect();
        self.ledger = ResourceLedger::new(n);
        self.spawn_fire();
        for i in 0..n {
            let d = self.observed_fire_distance(i).unwrap_or(f64::INFINITY);
            self.towers[i].last_fire_distance = d;
            self.towers[i].performance = tower_performance(f64::INFINITY, d);
        }
    }

    fn vector_frame(&self, agent: usize, out: &mut [f32]) {
        let tw = &self.towers[agent];
        let t = self.t as f64;
        let (rel, detected) = match self.observed_fire_distance(agent) {
            Some(_) => {
                let d = self.fire.position - tw.position;
                (
                    [d.x / DETECTION_RADIUS, d.y / DETECTION_RADIUS, (self.fire_z() - tw.z) / MAX_TERRAIN_HEIGHT],
                    1.0,
                )
            }
            None => ([0.0; 3], 0.0),
        };
        let v = [
            rel[0],
            rel[1],
            rel[2],
            self.temperature.sample(tw.position, t),
            self.humidity.sample(tw.position, t),
            self.overcast.sample(tw.position, t),
            self.ledger.tower_total(agent) / 4.0,
            detected,
        ];
        for (o, x) in out.iter_mut().zip(v) {
            *o = (x as f32).clamp(-1.0, 1.0);
        }
    }

    fn advance(&mut self, actions: &[AgentAction]) -> Tick {
        let n = self.towers.len();
        for (a, act) in actions.iter().enumerate() {
            self.ledger.apply(a, &act.discrete);
        }
        self.t += 1;
        self.advance_fire();
        for i in 0..n {
            let d1 = self.observed_fire_distance(i).unwrap_or(f64::INFINITY);
            let tw = &mut self.towers[i];
            tw.performance = tower_performance(tw.last_fire_distance, d1);
            tw.last_fire_distance = d1;
        }
        let perf: Vec<f64> = self.towers.iter().map(|t| t.performance).collect();
        let collective = collective_reward(&perf);
        let breakdowns = (0..n)
            .map(|a| {
                let nb = neighbours(a);
                let nperf: Vec<f64> = nb.iter().map(|&j| perf[j]).collect();
                let useful = nb
                    .iter()
                    .filter(|&&j| self.ledger.contrib[a][j] > 0 && perf[j] > 0.5)
                    .count() as f64;
                let mut bd = RewardBreakdown::zeros(EnvId::Wrm);
                bd.values[WATCH_TOWER] = self_reward(perf[a], self.ledger.supplied(a, a));
                bd.values[NEIGHBOURHOOD] = neighbour_reward(&nperf) + USEFUL_BONUS * useful;
                bd.values[COLLECTIVE] = collective;
                bd
            })
            .collect();
        Tick {
            breakdowns,
            agent_done: vec![false; n],
            terminal: false,
            metric: EnvMetric::new("individual_performance", perf),
        }
    }
}
