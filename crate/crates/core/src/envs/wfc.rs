//! Wind farm control: turbine agents rotate to track a drifting wind.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::rng::{derive_key, stream, StreamId};
use crate::sim::{AgentAction, EnvConfig, EnvId, EnvMetric, Episode, SpaceSpec, Simulation, Tick};
use crate::tasks::RewardBreakdown;
use crate::worldgen::{layout_turbines, FieldKind, ScalarField};

pub const HALF_EXTENT: f64 = 200.0;
/// Degrees turned per rotate action.
pub const ROTATE_SPEED: f64 = 2.0;
/// Motor acceleration constant of the performance recurrence.
pub const ACCELERATION: f64 = 0.1;

pub const GENERATE_ENERGY: usize = 0;
pub const AVOID_DAMAGE: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Turbine {
    pub position: Vec2,
    /// Unit vector the rotor faces.
    pub orientation: Vec2,
    /// Performance in `[0, 1]`.
    pub performance: f64,
}

/// Rotates by `+ROTATE_SPEED` (action 1, left) or `-ROTATE_SPEED`
/// (action 2, right); action 0 keeps the orientation.
pub fn apply_rotation(orientation: Vec2, action: usize) -> Result<Vec2> {
    match action {
        0 => Ok(orientation),
        1 => Ok(orientation.rotated_deg(ROTATE_SPEED)),
        2 => Ok(orientation.rotated_deg(-ROTATE_SPEED)),
        _ => Err(Error::Action(format!("rotate action {action} out of range 0..3"))),
    }
}

/// Alignment of a turbine with the wind. `wind_from` points toward where
/// the wind comes from, so a turbine facing into the wind has θ = 0°.
/// Returns `(θ_norm, θ_deg)` with `θ_norm = (1 + cos θ) / 2`.
pub fn alignment(orientation: Vec2, wind_from: Vec2) -> Result<(f64, f64)> {
    let (o, w) = match (orientation.normalized(), wind_from.normalized()) {
        (Some(o), Some(w)) => (o, w),
        _ => return Err(Error::Domain("alignment of a zero-length vector".into())),
    };
    let cos = o.dot(w).clamp(-1.0, 1.0);
    let deg = cos.acos().to_degrees();
    Ok(((1.0 + cos) / 2.0, deg))
}

/// Wind force factor: 0 below `θ_norm = 0.5`, then linear to 1.
pub fn wind_force(theta_norm: f64) -> f64 {
    if theta_norm < 0.5 {
        0.0
    } else {
        ((theta_norm - 0.5) / 0.5).clamp(0.0, 1.0)
    }
}

/// One step of the performance recurrence. Returns `(reward, new P)`;
/// the reward is the new performance.
pub fn generate_energy_reward(performance: f64, theta_norm: f64) -> (f64, f64) {
    let w = wind_force(theta_norm);
    let drag = -ACCELERATION * performance;
    let p = (performance + drag + w * ACCELERATION).clamp(0.0, 1.0);
    (p, p)
}

/// Tent reward peaking at 90°: rotor blades parallel to the wind.
pub fn avoid_damage_reward(theta_deg: f64) -> Result<f64> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(Error::Domain(format!("angle {theta_deg} outside [0, 180]")));
    }
    Ok(if theta_deg <= 90.0 {
        theta_deg / 90.0
    } else {
        2.0 - theta_deg / 90.0
    })
}

pub struct WindFarm {
    spec: SpaceSpec,
    pattern: u32,
    pub turbines: Vec<Turbine>,
    pub wind: ScalarField,
    pub t: u64,
}

impl WindFarm {
    pub fn new(config: &EnvConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.spec();
        let pattern = config.scenario.unwrap_or(0);
        // surfaces non-tiling counts at construction
        layout_turbines(pattern, spec.agent_count, config.seed, HALF_EXTENT)?;
        Ok(Self {
            spec,
            pattern,
            turbines: Vec::new(),
            wind: ScalarField::new(FieldKind::WindDirection, config.seed, HALF_EXTENT),
            t: 0,
        })
    }

    pub fn episode(config: &EnvConfig) -> Result<Episode<Self>> {
        Episode::new(Self::new(config)?, config.clone())
    }

    /// Wind origin direction at turbine `i` at the current time.
    pub fn wind_at(&self, i: usize) -> Vec2 {
        self.wind.direction(self.turbines[i].position, self.t as f64)
    }

    pub fn mean_performance(&self) -> f64 {
        self.turbines.iter().map(|t| t.performance).sum::<f64>() / self.turbines.len() as f64
    }
}

impl Simulation for WindFarm {
    fn env_id(&self) -> EnvId {
        EnvId::Wfc
    }

    fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    fn regenerate(&mut self, seed: u64) {
        let positions = layout_turbines(self.pattern, self.spec.agent_count, seed, HALF_EXTENT)
            .expect("layout validated at construction");
        self.wind = ScalarField::new(FieldKind::WindDirection, seed, HALF_EXTENT);
        let mut rng = stream(derive_key(seed, "wfc"), StreamId::Dynamics);
        self.turbines = positions
            .into_iter()
            .map(|position| Turbine {
                position,
                orientation: Vec2::from_angle_deg(rng.random_range(-180.0..180.0)),
                performance: 0.0,
            })
            .collect();
        self.t = 0;
    }

    fn vector_frame(&self, agent: usize, out: &mut [f32]) {
        let tb = &self.turbines[agent];
        let w = self.wind_at(agent);
        let v = [
            tb.position.x / HALF_EXTENT,
            tb.position.y / HALF_EXTENT,
            tb.orientation.x,
            tb.orientation.y,
            w.x,
            w.y,
        ];
        for (o, x) in out.iter_mut().zip(v) {
            *o = (x as f32).clamp(-1.0, 1.0);
        }
    }

    fn advance(&mut self, actions: &[AgentAction]) -> Tick {
        for (tb, a) in self.turbines.iter_mut().zip(actions) {
            tb.orientation = apply_rotation(tb.orientation, a.discrete[0]).expect("validated action");
        }
        self.t += 1;
        let mut breakdowns = Vec::with_capacity(self.turbines.len());
        for i in 0..self.turbines.len() {
            let wind = self.wind_at(i);
            let tb = &mut self.turbines[i];
            let (theta_norm, theta_deg) = alignment(tb.orientation, wind).expect("unit vectors");
            let (energy, p) = generate_energy_reward(tb.performance, theta_norm);
            tb.performance = p;
            let mut bd = RewardBreakdown::zeros(EnvId::Wfc);
            bd.values[GENERATE_ENERGY] = energy;
            bd.values[AVOID_DAMAGE] = avoid_damage_reward(theta_deg).expect("acos range");
            breakdowns.push(bd);
        }
        let n = self.turbines.len();
        Tick {
            breakdowns,
            agent_done: vec![false; n],
            terminal: false,
            metric: EnvMetric::new("performance", self.turbines.iter().map(|t| t.performance).collect()),
        }
    }
}
