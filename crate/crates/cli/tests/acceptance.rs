//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero when a criterion outside `KNOWN_GAPS` fails.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ecomarl_cli::harness::{self, PolicySource};
use ecomarl_cli::metrics::{read_csv, AggregateRow, ScaleRow};
use ecomarl_cli::parse_config;
use ecomarl_core::envs::aws::{self, FireSuppression, Tree, TreeState};
use ecomarl_core::envs::dbr::{self, Reforestation, RunBack};
use ecomarl_core::envs::opc::{self, OceanCleanup, TrashField, Vessel};
use ecomarl_core::envs::wfc::{self, WindFarm};
use ecomarl_core::envs::wrm::{self, ResourceLedger, Watchtowers};
use ecomarl_core::geom::Vec2;
use ecomarl_core::ppo::dist::log_softmax;
use ecomarl_core::ppo::objective::ppo_clip_grad;
use ecomarl_core::ppo::{compute_gae, ppo_clip_objective, Trainer, TrainerConfig};
use ecomarl_core::sim::Simulation;
use ecomarl_core::tasks::scaled_reward;
use ecomarl_core::worldgen::{
    generate_terrain, generate_terrain_with, layout_turbines, scatter_forest, scatter_trash, FieldKind, ScalarField,
    TerrainGrid,
};
use ecomarl_core::{make_env, AgentAction, EnvConfig, EnvId, Environment, RewardBreakdown, SpaceSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;
const ORACLE_BUDGET_SECONDS: f64 = 10.0;
const FUZZ_CASES: usize = 10_000;
const CONSERVATION_STEPS: usize = 1_000;
const SHAPE_STEPS: usize = 200;
const REPLAY_STEPS: usize = 500;
const WFC_TREND_STEPS: u64 = 200_000;
const WFC_TREND_THRESHOLD: f64 = 0.8;
const AWS_TREND_STEPS: u64 = 100_000;
const TREND_SEEDS: [u64; 3] = [5000, 5001, 5002];
const SCALE_COUNTS: &str = "1,2,4,8,12,16";
const SCALE_RATIO_LIMIT: f64 = 20.0;

/// Criteria expected to fail, with the reason.
const KNOWN_GAPS: &[(&str, &str)] = &[(
    "learning-trend-wfc",
    "final energy stays below 0.8 on 2 of 3 seeds at lr 3e-4 within 2e5 steps",
)];

type Outcome = Result<String, String>;

// ---------------------------------------------------------------- oracles

#[derive(Default)]
struct Oracle {
    cases: usize,
    failures: Vec<String>,
}

impl Oracle {
    fn close(&mut self, name: &str, got: f64, want: f64) {
        self.cases += 1;
        if !((got - want).abs() <= TOL) {
            self.failures.push(format!("{name}: got {got}, want {want}"));
        }
    }

    fn check(&mut self, name: &str, ok: bool) {
        self.cases += 1;
        if !ok {
            self.failures.push(name.to_string());
        }
    }
}

fn wfc_episode(seed: u64) -> ecomarl_core::sim::Episode<WindFarm> {
    WindFarm::episode(&EnvConfig::new(EnvId::Wfc).with_seed(seed)).unwrap()
}

fn idle(spec: &SpaceSpec) -> Vec<AgentAction> {
    (0..spec.agent_count).map(|_| AgentAction::idle(spec)).collect()
}

fn oracle_behaviour(o: &mut Oracle) {
    // reset 7 vs 8: env wind equals direct field samples, and differs by seed
    let mut samples = Vec::new();
    for seed in [7, 8] {
        let ep = wfc_episode(seed);
        let field = ScalarField::new(FieldKind::WindDirection, seed, wfc::HALF_EXTENT);
        let mut s = Vec::new();
        for (i, tb) in ep.sim().turbines.iter().enumerate() {
            let want = field.direction(tb.position, 0.0);
            let got = ep.sim().wind_at(i);
            o.close("wfc wind sample x", got.x, want.x);
            o.close("wfc wind sample y", got.y, want.y);
            s.push(got);
        }
        samples.push(s);
    }
    let differ = samples[0].iter().zip(&samples[1]).any(|(a, b)| a.distance(*b) > 1e-6);
    o.check("wfc seeds 7 and 8 give different wind samples", differ);

    // do-nothing: orientation fixed, energy follows the recurrence
    let mut ep = wfc_episode(11);
    let field = ScalarField::new(FieldKind::WindDirection, 11, wfc::HALF_EXTENT);
    let start: Vec<Vec2> = ep.sim().turbines.iter().map(|t| t.orientation).collect();
    let mut perf = vec![0.0; start.len()];
    let spec = ep.spec().clone();
    for step in 1..=60u64 {
        let out = ep.step(&idle(&spec)).unwrap();
        for (i, tb) in ep.sim().turbines.iter().enumerate() {
            o.check("wfc action 0 keeps orientation", tb.orientation == start[i]);
            let w = field.direction(tb.position, step as f64);
            let cos = (start[i].x * w.x + start[i].y * w.y) / (start[i].norm() * w.norm());
            let theta_norm = (1.0 + cos) / 2.0;
            let force = ((theta_norm - 0.5) * 2.0).clamp(0.0, 1.0);
            perf[i] = (perf[i] + 0.1 * (force - perf[i])).clamp(0.0, 1.0);
            o.close("wfc recurrence reward", out.rewards[i], perf[i]);
        }
    }

    // OPC throttle from center: hand-integrated kinematics
    let mut ep = OceanCleanup::episode(&EnvConfig::new(EnvId::Opc).with_seed(3)).unwrap();
    {
        let sim = ep.sim_mut();
        sim.trash = TrashField::new(Vec::new());
        for (j, v) in sim.vessels.iter_mut().enumerate() {
            *v = Vessel::new(Vec2::new(-150.0 + 20.0 * j as f64, -150.0), Vec2::new(0.0, 1.0));
        }
        sim.vessels[0] = Vessel::new(Vec2::ZERO, Vec2::new(1.0, 0.0));
    }
    let spec = ep.spec().clone();
    let mut actions = idle(&spec);
    actions[0] = AgentAction::discrete(vec![1, 0]);
    let (mut x, mut speed) = (0.0f64, 0.0f64);
    for _ in 0..25 {
        ep.step(&actions).unwrap();
        speed = 0.95 * speed + 0.4;
        x += speed;
        let v = &ep.sim().vessels[0];
        o.close("opc throttle x", v.position.x, x);
        o.close("opc throttle y", v.position.y, 0.0);
        o.close("opc throttle speed", v.speed, speed);
    }
}

fn slopes_brute_force(t: &TerrainGrid) -> Vec<f64> {
    let n = t.resolution;
    let h = |r: usize, c: usize| t.heights[r * n + c];
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            if c + 1 < n {
                out.push((h(r, c + 1) - h(r, c)).abs() / t.cell_size);
            }
            if r + 1 < n {
                out.push((h(r + 1, c) - h(r, c)).abs() / t.cell_size);
            }
        }
    }
    out
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn oracle_worldgen(o: &mut Oracle) {
    let seeds = 0..20u64;
    let mut l1_max = 0.0f64;
    let mut l10_medians = Vec::new();
    for s in seeds.clone() {
        let t1 = generate_terrain(1, s, 200.0).unwrap();
        let t10 = generate_terrain(10, s, 200.0).unwrap();
        l1_max = l1_max.max(slopes_brute_force(&t1).into_iter().fold(0.0, f64::max));
        l10_medians.push(median(slopes_brute_force(&t10)));
        let peak = t10.heights.iter().copied().fold(f64::MIN, f64::max);
        o.check(&format!("level 10 seed {s} has a cell >= 20 m (max {peak:.2})"), peak >= 0.5 * 40.0);
    }
    let m10 = median(l10_medians);
    o.check(&format!("level-1 max slope {l1_max:.4} < level-10 median slope {m10:.4}"), l1_max < m10);

    for kind in [FieldKind::WindDirection, FieldKind::Temperature, FieldKind::Humidity, FieldKind::Overcast] {
        let f = ScalarField::new(kind, 5, 600.0);
        let n = 41;
        let cell = 1200.0 / (n - 1) as f64;
        let bound = f.lipschitz_per_meter() * cell;
        let at = |r: usize, c: usize| f.sample(Vec2::new(-600.0 + c as f64 * cell, -600.0 + r as f64 * cell), 37.0);
        let mut ok = true;
        for r in 0..n {
            for c in 0..n {
                if c + 1 < n && (at(r, c + 1) - at(r, c)).abs() > bound {
                    ok = false;
                }
                if r + 1 < n && (at(r + 1, c) - at(r, c)).abs() > bound {
                    ok = false;
                }
            }
        }
        o.check(&format!("{kind:?} neighbours within the Lipschitz bound"), ok);
    }

    for n in [4, 8, 12, 16] {
        let pts = layout_turbines(3, n, 1, 200.0).unwrap();
        let cx = pts.iter().map(|p| p.x).sum::<f64>() / n as f64;
        let cy = pts.iter().map(|p| p.y).sum::<f64>() / n as f64;
        let radii: Vec<f64> = pts.iter().map(|p| ((p.x - cx).powi(2) + (p.y - cy).powi(2)).sqrt()).collect();
        let spread = radii.iter().copied().fold(f64::MIN, f64::max) - radii.iter().copied().fold(f64::MAX, f64::min);
        o.check(&format!("circle layout of {n} equidistant from its centroid"), spread <= 1e-6);
    }
    for n in [4, 9, 16] {
        let pts = layout_turbines(1, n, 1, 200.0).unwrap();
        let mut step = f64::MAX;
        for a in &pts {
            for b in &pts {
                for d in [(a.x - b.x).abs(), (a.y - b.y).abs()] {
                    if d > 1e-9 {
                        step = step.min(d);
                    }
                }
            }
        }
        let on_lattice = pts.iter().all(|a| {
            pts.iter().all(|b| {
                [(a.x - b.x) / step, (a.y - b.y) / step]
                    .iter()
                    .all(|k| (k - k.round()).abs() < 1e-9)
            })
        });
        o.check(&format!("grid layout of {n} on a regular lattice"), on_lattice);
    }

    let forest = |level: u32| -> usize {
        seeds
            .clone()
            .map(|s| scatter_forest(&generate_terrain_with(level, s, 200.0, 64).unwrap(), s, 200.0).len())
            .sum()
    };
    let (f1, f10) = (forest(1), forest(10));
    o.check(&format!("forest level 10 ({f10}) sparser than level 1 ({f1})"), f10 < f1);

    for s in seeds {
        let t = scatter_trash(s, 200.0);
        let near = t
            .pebbles
            .iter()
            .filter(|p| t.centers.iter().any(|c| ((p.x - c.x).powi(2) + (p.y - c.y).powi(2)).sqrt() <= 25.0))
            .count();
        o.check(&format!("trash seed {s}: >= 80% near a cluster center"), near * 5 >= t.pebbles.len() * 4);
    }
}

fn oracle_wfc(o: &mut Oracle) {
    let start = Vec2::from_angle_deg(17.0);
    let mut v = start;
    for _ in 0..(360.0 / wfc::ROTATE_SPEED) as usize {
        v = wfc::apply_rotation(v, 1).unwrap();
    }
    o.check("180 left rotations restore orientation", v.distance(start) <= 1e-6);
    let (r, p) = wfc::generate_energy_reward(0.0, 1.0);
    o.close("P=0 θn=1 reward", r, 0.0 + (1.0 - 0.0) * 0.1);
    o.close("P=0 θn=1 next P", p, 0.1);
    let (r, p) = wfc::generate_energy_reward(0.5, 0.4);
    o.close("P=0.5 θn=0.4 reward", r, 0.5 - 0.1 * 0.5);
    o.close("P=0.5 θn=0.4 next P", p, 0.45);
    o.close("avoid damage at 45°", wfc::avoid_damage_reward(45.0).unwrap(), 45.0 / 90.0);
}

fn power_law(d1p: f64) -> f64 {
    let x = d1p * 1000.0 / 270.0;
    1.0 / (1.0 + x * x * x * x * x).sqrt()
}

fn oracle_wrm(o: &mut Oracle) {
    let mut l = ResourceLedger::new(9);
    l.contrib[0][0] = 0;
    l.pools[0] = 10;
    l.apply(0, &[1, 0, 0, 0]);
    o.close("add: self resources", l.supplied(0, 0), 0.1);
    o.close("add: pool", l.pool(0), 0.9);
    let mut l = ResourceLedger::new(9);
    l.contrib[0][0] = 5;
    l.pools[0] = 5;
    l.apply(0, &[2, 0, 0, 0]);
    o.close("sub: self resources", l.supplied(0, 0), 0.4);
    o.close("sub: pool", l.pool(0), 0.6);

    // approaching: d1 < d0
    o.close("m true d1n=1", wrm::tower_performance(300.0, 200.0), power_law(0.0));
    o.close("m true d1n=1 is 1", wrm::tower_performance(300.0, 200.0), 1.0);
    let p_mid = wrm::tower_performance(10.0, 0.0);
    o.close("m true d1n=0", p_mid, power_law(0.5));
    o.check("m true d1n=0 ≈ 0.2095", (p_mid - 0.2095).abs() < 5e-5);
    let p_far = wrm::tower_performance(100.0, 200.0);
    o.close("m false d1n=1", p_far, power_law(1.0));
    o.check("m false d1n=1 ≈ 0.0379", (p_far - 0.0379).abs() < 5e-5);
    o.close("self reward P=1 r=0.5", wrm::self_reward(1.0, 0.5), 1.0 * 0.5 * 0.5);
    o.close("self reward P=0.2095 r=1", wrm::self_reward(p_mid, 1.0), p_mid);
    o.close("neighbours (1,1,1)", wrm::neighbour_reward(&[1.0, 1.0, 1.0]), 3.0);
    o.close("neighbours (0.2,0.3,0.5)", wrm::neighbour_reward(&[0.2, 0.3, 0.5]), 1.0);
    let mut p = [0.0; 9];
    p[0] = 1.0;
    o.close("collective one-hot", wrm::collective_reward(&p), (1.0f64 / 9.0).sqrt());
    o.close("collective one-hot is 1/3", wrm::collective_reward(&p), 1.0 / 3.0);
}

fn opc_episode() -> ecomarl_core::sim::Episode<OceanCleanup> {
    let mut ep = OceanCleanup::episode(&EnvConfig::new(EnvId::Opc).with_seed(21)).unwrap();
    let sim = ep.sim_mut();
    sim.trash = TrashField::new(Vec::new());
    for (j, v) in sim.vessels.iter_mut().enumerate() {
        *v = Vessel::new(Vec2::new(100.0, -150.0 + 30.0 * j as f64), Vec2::new(0.0, 1.0));
    }
    sim.vessels[0] = Vessel::new(Vec2::ZERO, Vec2::new(1.0, 0.0));
    ep
}

fn oracle_opc(o: &mut Oracle) {
    let mut v = Vessel::new(Vec2::ZERO, Vec2::new(1.0, 0.0));
    v.speed = 5.0;
    for k in 1..=200 {
        opc::steer_and_throttle(&mut v, 0, 0);
        o.close("speed decay", v.speed, 5.0 * 0.95f64.powi(k));
    }
    o.check("speed decays toward 0", v.speed < 1e-3);

    let mut ep = opc_episode();
    ep.sim_mut().trash = TrashField::new(vec![Vec2::new(0.3, 1.5), Vec2::new(0.2, -1.9)]);
    let spec = ep.spec().clone();
    let mut actions = idle(&spec);
    actions[0] = AgentAction::discrete(vec![1, 0]);
    let out = ep.step(&actions).unwrap();
    o.close("two pebbles collected", ep.sim().vessels[0].collected as f64, 2.0);
    o.close("two pebbles reward", out.rewards[0], 2.0);

    let heading = Vec2::from_angle_deg(30.0);
    let vessel = Vessel::new(Vec2::new(10.0, -20.0), heading);
    let pebble = Vec2::new(10.0 + 4.0 * 30f64.to_radians().cos(), -20.0 + 4.0 * 30f64.to_radians().sin());
    let mut grid = vec![0.0f32; opc::GRID_SIDE * opc::GRID_SIDE];
    opc::build_trash_grid(&vessel, &TrashField::new(vec![pebble]), &mut grid);
    // forward 4 m = two 2 m cells past the center row 12; lateral 0 -> column 12
    let want = 14 * 25 + 12;
    o.close("pebble 4 m ahead cell value", grid[want] as f64, 0.25);
    let others: f64 = grid.iter().enumerate().filter(|(k, _)| *k != want).map(|(_, v)| *v as f64).sum();
    o.close("pebble 4 m ahead elsewhere empty", others, 0.0);

    o.close("lowest (3,5,7)", opc::lowest_count_reward(&[3, 5, 7]), 3.0 * 0.01);
    o.close("lowest (4)", opc::lowest_count_reward(&[4]), 0.04);
    let (r, old) = opc::nearby_trash_delta(4, 7);
    o.close("nearby delta 4->7", r, 3.0);
    o.close("nearby old becomes 7", old as f64, 7.0);

    let mut ep = opc_episode();
    ep.sim_mut().trash = TrashField::new((-2..=2).map(|k| Vec2::new(-10.0, k as f64)).collect());
    let spec = ep.spec().clone();
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("first step nearby delta", out.breakdowns[0].values[opc::NEARBY_TRASH_DELTA], 5.0);
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("second step nearby delta", out.breakdowns[0].values[opc::NEARBY_TRASH_DELTA], 0.0);
}

fn oracle_dbr(o: &mut Oracle) {
    let mut ep = Reforestation::episode(&EnvConfig::new(EnvId::Dbr).with_seed(4)).unwrap();
    let spec = ep.spec().clone();
    let (p0, h0) = (ep.sim().drones[0].position, ep.sim().drones[0].heading);
    let mut actions = idle(&spec);
    actions[0] = AgentAction::hybrid(vec![1.0, 0.0, 0.0], vec![0]);
    for k in 1..=20 {
        ep.step(&actions).unwrap();
        let p = ep.sim().drones[0].position;
        o.close("drone throttle x", p.x, p0.x + h0.x * 2.0 * k as f64);
        o.close("drone throttle y", p.y, p0.y + h0.y * 2.0 * k as f64);
    }

    let (rs, rd, t) = dbr::drop_seed_reward(2.5, 5.0, 200.0);
    o.close("det 2.5 r_s", rs, 20.0);
    o.close("det 2.5 r_d", rd, 10.0);
    o.close("det 2.5 total", t, 30.0);
    let (rs, rd, t) = dbr::drop_seed_reward(75.0, 5.0, 200.0);
    o.close("det 75 r_s", rs, 0.0);
    o.close("det 75 r_d", rd, 0.0);
    o.close("det 75 total", t, 0.0);
    let (rs, rd, t) = dbr::drop_seed_reward(38.75, 5.0, 100.0);
    o.close("det 38.75 r_s", rs, (75.0 - 38.75) / (75.0 - 2.5) * 20.0);
    o.close("det 38.75 r_d", rd, 100.0 / 200.0 * 10.0);
    o.close("det 38.75 total", t, 15.0);
    o.close("energy holding", dbr::energy_penalty(true), -1.0 / 1000.0);
    o.close("energy not holding", dbr::energy_penalty(false), -1.0 / 2000.0);
    let rb = RunBack::new(20.0, 10.0, 57.5);
    o.close("rbm", rb.multiplier(), 30.0 / 30.0);
    let increments = (57.5 - 7.5) / 2.5;
    o.close("increments", increments, 20.0);
    o.close("per increment", rb.per_increment(), 20.0 * rb.multiplier() / increments);
    o.close("fertility delta", dbr::positive_delta(0.0, 0.6).0, 0.6);
    let mut best = 0.0;
    let mut paid = Vec::new();
    for d in [50.0, 120.0, 90.0] {
        let (r, b) = dbr::positive_delta(best, d);
        best = b;
        paid.push(r);
    }
    o.close("distance delta 0->50", paid[0], 50.0);
    o.close("distance delta 50->120", paid[1], 70.0);
    o.close("distance delta 120->90", paid[2], 0.0);
    o.check("distance deltas total <= 200", paid.iter().sum::<f64>() <= 200.0);

    let mut ep = Reforestation::episode(&EnvConfig::new(EnvId::Dbr).with_task(1).with_seed(4)).unwrap();
    {
        let sim = ep.sim_mut();
        sim.drones[0].position = Vec2::new(150.0, 150.0);
        sim.drones[0].found_tree = false;
        sim.add_tree(Vec2::new(150.0, 160.0));
        sim.add_tree(Vec2::new(-150.0, -145.0));
    }
    let spec = ep.spec().clone();
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("find close tree first", out.breakdowns[0].values[dbr::FIND_CLOSE_TREE], 100.0);
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("find close tree again", out.breakdowns[0].values[dbr::FIND_CLOSE_TREE], 0.0);
    ep.sim_mut().drones[0].position = Vec2::new(-150.0, -150.0);
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("find close tree elsewhere", out.breakdowns[0].values[dbr::FIND_CLOSE_TREE], 0.0);
}

fn tree(p: Vec2, state: TreeState) -> Tree {
    Tree {
        position: p,
        state,
        timer: aws::BURN_STEPS,
    }
}

fn aws_episode(task: usize) -> ecomarl_core::sim::Episode<FireSuppression> {
    let mut ep = FireSuppression::episode(&EnvConfig::new(EnvId::Aws).with_task(task).with_seed(8)).unwrap();
    let sim = ep.sim_mut();
    sim.village = Vec2::new(300.0, 300.0);
    for (j, pl) in sim.planes.iter_mut().enumerate() {
        pl.position = Vec2::new(-100.0 + 50.0 * j as f64, 200.0);
        pl.heading = Vec2::new(0.0, -1.0);
        pl.holding_water = false;
    }
    sim.planes[0].position = Vec2::ZERO;
    sim.planes[0].heading = Vec2::new(1.0, 0.0);
    ep
}

fn oracle_aws(o: &mut Oracle) {
    let b = |x: f64| tree(Vec2::new(x, 0.0), TreeState::Burning);
    let a = |x: f64| tree(Vec2::new(x, 0.0), TreeState::Alive);
    let (_, _, r) = aws::drop_water(&mut [b(0.0), b(1.0), b(2.0)], &[0, 1, 2]);
    o.close("3 burning", r, 5.0 * 3.0);
    let (_, _, r) = aws::drop_water(&mut [a(0.0), a(1.0)], &[0, 1]);
    o.close("2 alive", r, 1.0 + 1.0);
    let (_, _, r) = aws::drop_water(&mut [b(0.0), a(1.0)], &[0, 1]);
    o.close("1 burning 1 alive", r, 5.0 + 1.0);

    let mut ep = aws_episode(7);
    ep.sim_mut().set_trees(vec![tree(Vec2::new(100.0, 0.0), TreeState::Burning)]);
    let spec = ep.spec().clone();
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("find fire first", out.breakdowns[0].values[aws::FIND_FIRE], 100.0);
    let out = ep.step(&idle(&spec)).unwrap();
    o.close("find fire again", out.breakdowns[0].values[aws::FIND_FIRE], 0.0);

    let mut ep = aws_episode(0);
    let angle = 40.0f64;
    let (c, s) = (angle.to_radians().cos(), angle.to_radians().sin());
    let heading = Vec2::new(c, s);
    let ahead = |fwd: f64, right: f64| Vec2::new(fwd * c + right * s, fwd * s - right * c);
    ep.sim_mut().planes[0].heading = heading;
    ep.sim_mut()
        .set_trees(vec![tree(ahead(50.0, -5.0), TreeState::Burning), tree(ahead(50.0, 5.0), TreeState::Burning)]);
    let side = aws::CAMERA_SIDE;
    let mut frame = vec![0.0f32; side * side * 3];
    ep.sim().visual_frame(0, &mut frame);
    let red: Vec<(usize, usize)> = (0..side * side).filter(|k| frame[k * 3] > 0.0).map(|k| (k / side, k % side)).collect();
    // forward 50 m = 5 cells past the center row 21; lateral ±5 m -> columns 20 and 21
    o.check("burning cluster in forward rows", red == vec![(26, 20), (26, 21)]);
    o.close("burning cell value", frame[(26 * side + 20) * 3] as f64, 0.5);

    let mut bd = RewardBreakdown::zeros(EnvId::Aws);
    bd.values[aws::EXTINGUISHING] = 5.0;
    o.close("task 1 extinguish scaled", scaled_reward(EnvId::Aws, 1, &bd).unwrap(), 5.0 * 10.0);
    let mut ep = aws_episode(1);
    ep.sim_mut().planes[0].holding_water = true;
    ep.sim_mut().set_trees(vec![
        tree(Vec2::new(10.0, 0.0), TreeState::Burning),
        tree(Vec2::new(-500.0, -500.0), TreeState::Burning),
    ]);
    let mut actions = idle(&spec);
    actions[0] = AgentAction::hybrid(vec![0.0], vec![1]);
    let out = ep.step(&actions).unwrap();
    o.close("task 1 extinguish env reward", out.rewards[0], 50.0);
}

fn gae_unrolled(rewards: &[f64], values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            let mut total = 0.0;
            let mut weight = 1.0;
            for j in t..rewards.len() {
                let live = if dones[j] { 0.0 } else { 1.0 };
                total += weight * (rewards[j] + gamma * values[j + 1] * live - values[j]);
                if dones[j] {
                    break;
                }
                weight *= gamma * lambda;
            }
            total
        })
        .collect()
}

fn oracle_ppo_and_harness(o: &mut Oracle) {
    let (adv, _) = compute_gae(&[1.0, 1.0], &[0.5, 0.5, 0.0], &[false, true], 0.9, 0.95).unwrap();
    let d1 = 1.0 + 0.9 * 0.0 - 0.5;
    let d0 = 1.0 + 0.9 * 0.5 - 0.5;
    o.close("gae A0", adv[0], d0 + 0.9 * 0.95 * d1);
    o.close("gae A0 is 1.3775", adv[0], 1.3775);
    o.close("clip r=2 A=1", ppo_clip_objective(2.0, 1.0, 0.2), 1.2);
    o.close("clip r=0.5 A=-1", ppo_clip_objective(0.5, -1.0, 0.2), -0.8);

    let mut tr = Trainer::new(TrainerConfig::default(), EnvConfig::new(EnvId::Wfc).with_seed(5000), 1).unwrap();
    let rollout = tr.collect(2048).unwrap();
    o.close("8 agents x 2048", rollout.len() as f64, (8 * 2048) as f64);

    let dir = tempfile::tempdir().unwrap();
    let mut config = parse_config(harness::builtin_config(EnvId::Wfc)).unwrap();
    config.set_max_steps(Some(16), Some(16));
    harness::run_grid(&config, dir.path(), &PolicySource::Train).unwrap();
    let rows: Vec<AggregateRow> = read_csv(&dir.path().join("aggregate.csv")).unwrap();
    o.close("wfc grid aggregate rows", rows.len() as f64, (9 * 2 * 3) as f64);
    o.check("wfc grid rows all ok", rows.iter().all(|r| r.status == "ok"));
}

fn derived_oracles() -> Outcome {
    let t0 = Instant::now();
    let mut o = Oracle::default();
    oracle_behaviour(&mut o);
    oracle_worldgen(&mut o);
    oracle_wfc(&mut o);
    oracle_wrm(&mut o);
    oracle_opc(&mut o);
    oracle_dbr(&mut o);
    oracle_aws(&mut o);
    oracle_ppo_and_harness(&mut o);
    let secs = t0.elapsed().as_secs_f64();
    if !o.failures.is_empty() {
        return Err(format!("{} of {} cases failed: {}", o.failures.len(), o.cases, o.failures.join("; ")));
    }
    if secs >= ORACLE_BUDGET_SECONDS {
        return Err(format!("{} cases match but took {secs:.1} s (budget {ORACLE_BUDGET_SECONDS} s)", o.cases));
    }
    Ok(format!("{} cases, |Δ| <= {TOL:e}, {secs:.2} s", o.cases))
}

// ---------------------------------------------------------------- properties

fn range_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut bad = Vec::new();
    let dist = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.1) {
            f64::INFINITY
        } else {
            rng.random_range(0.0..300.0)
        }
    };
    for _ in 0..FUZZ_CASES {
        let (r, p) = wfc::generate_energy_reward(rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        if !(0.0..=1.0).contains(&r) || !(0.0..=1.0).contains(&p) {
            bad.push(format!("wfc energy {r}"));
        }
        let a = wfc::avoid_damage_reward(rng.random_range(0.0..=180.0)).unwrap();
        if !(0.0..=1.0).contains(&a) {
            bad.push(format!("wfc avoid damage {a}"));
        }
        let (_, _, total) = dbr::drop_seed_reward(dist(&mut rng), dist(&mut rng), rng.random_range(0.0..300.0));
        if !(0.0..=30.0).contains(&total) {
            bad.push(format!("dbr drop seed {total}"));
        }
        let d_init = rng.random_range(0.0..300.0);
        let mut leg = RunBack::new(rng.random_range(0.0..=20.0), rng.random_range(0.0..=10.0), d_init);
        let mut d = d_init;
        let mut paid = 0.0;
        for _ in 0..rng.random_range(1..200) {
            d = (d + rng.random_range(-15.0..15.0)).max(0.0);
            paid += leg.step(d);
        }
        if paid > 20.0 + TOL {
            bad.push(format!("dbr running back {paid}"));
        }
        let n = rng.random_range(1..=9);
        let perf: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
        let c = wrm::collective_reward(&perf);
        if !(0.0..=1.0).contains(&c) {
            bad.push(format!("wrm collective {c}"));
        }
    }
    if bad.is_empty() {
        Ok(format!("{FUZZ_CASES} cases x 5 properties"))
    } else {
        Err(format!("{} violations, first: {}", bad.len(), bad[0]))
    }
}

fn random_action(spec: &SpaceSpec, rng: &mut ChaCha8Rng) -> AgentAction {
    AgentAction {
        discrete: spec.discrete_branches.iter().map(|&b| rng.random_range(0..b)).collect(),
        continuous: (0..spec.continuous_actions).map(|_| rng.random_range(-1.0..1.0)).collect(),
    }
}

fn wrm_conservation() -> Outcome {
    let mut ep = Watchtowers::episode(&EnvConfig::new(EnvId::Wrm).with_seed(31)).unwrap();
    let spec = ep.spec().clone();
    let expected = spec.agent_count as u64 * wrm::UNITS_PER_AGENT as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for step in 0..CONSERVATION_STEPS {
        if ep.is_done() {
            ep.reset(32 + step as u64);
        }
        let actions: Vec<_> = (0..spec.agent_count).map(|_| random_action(&spec, &mut rng)).collect();
        ep.step(&actions).map_err(|e| e.to_string())?;
        let total = ep.sim().ledger.total_units();
        if total != expected {
            return Err(format!("step {step}: {total} tenths held, expected {expected}"));
        }
    }
    Ok(format!("{CONSERVATION_STEPS} random steps, {expected} tenths throughout"))
}

fn shape_conformance() -> Outcome {
    let expected = [
        (EnvId::Wfc, 6, None),
        (EnvId::Wrm, 16, None),
        (EnvId::Opc, 12, Some(1250)),
        (EnvId::Dbr, 20, Some(256)),
        (EnvId::Aws, 8, Some(5292)),
    ];
    for (env_id, vector, visual) in expected {
        let mut env = make_env(&EnvConfig::new(env_id).with_seed(3)).map_err(|e| e.to_string())?;
        let spec = env.spec().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let check = |obs: &[ecomarl_core::AgentObs], step: usize| -> Result<(), String> {
            for (i, o) in obs.iter().enumerate() {
                let vis = o.visual.as_ref().map(Vec::len);
                if o.vector.len() != vector || vis != visual {
                    return Err(format!(
                        "{env_id} step {step} agent {i}: sizes {}+{vis:?}, expected {vector}+{visual:?}",
                        o.vector.len()
                    ));
                }
            }
            Ok(())
        };
        check(&env.observations(), 0)?;
        for step in 1..=SHAPE_STEPS {
            let actions: Vec<_> = (0..spec.agent_count).map(|_| random_action(&spec, &mut rng)).collect();
            let out = env.step(&actions).map_err(|e| e.to_string())?;
            check(&out.observations, step)?;
        }
    }
    Ok(format!("{SHAPE_STEPS} steps per env: 6; 16; 12+1250; 20+256; 8+5292"))
}

fn replay_digests(env_id: EnvId, seed: u64, actions: &[Vec<AgentAction>]) -> Vec<u64> {
    let mut env = make_env(&EnvConfig::new(env_id).with_seed(seed)).unwrap();
    let mut out = Vec::with_capacity(actions.len());
    for a in actions {
        let step = env.step(a).unwrap();
        let mut h = DefaultHasher::new();
        for (r, o) in step.rewards.iter().zip(&step.observations) {
            r.to_bits().hash(&mut h);
            for v in &o.vector {
                v.to_bits().hash(&mut h);
            }
            for v in o.visual.iter().flatten() {
                v.to_bits().hash(&mut h);
            }
        }
        out.push(h.finish());
        if step.episode_done {
            env.reset(seed + 1);
        }
    }
    out
}

fn determinism() -> Outcome {
    for env_id in EnvId::ALL {
        let spec = EnvConfig::new(env_id).spec();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let log: Vec<Vec<AgentAction>> = (0..REPLAY_STEPS)
            .map(|_| (0..spec.agent_count).map(|_| random_action(&spec, &mut rng)).collect())
            .collect();
        let a = replay_digests(env_id, 41, &log);
        let b = replay_digests(env_id, 41, &log);
        if let Some(step) = a.iter().zip(&b).position(|(x, y)| x != y) {
            return Err(format!("{env_id} diverged at step {step}"));
        }
    }
    Ok(format!("{REPLAY_STEPS} steps x 5 envs bitwise identical"))
}

fn gae_and_clip() -> Outcome {
    let value_grid = [-1.0, 0.0, 0.5];
    let reward_grid = [0.0, 1.5];
    let params = [(0.9, 0.95), (0.99, 0.0), (1.0, 1.0), (0.5, 0.7)];
    let mut cases = 0u64;
    for len in 1..=5usize {
        for rmask in 0..(1usize << len) {
            let rewards: Vec<f64> = (0..len).map(|i| reward_grid[(rmask >> i) & 1]).collect();
            for dmask in 0..(1usize << len) {
                let dones: Vec<bool> = (0..len).map(|i| (dmask >> i) & 1 == 1).collect();
                for vc in 0..3usize.pow(len as u32 + 1) {
                    let values: Vec<f64> = (0..=len).map(|i| value_grid[vc / 3usize.pow(i as u32) % 3]).collect();
                    for &(g, l) in &params {
                        let (adv, _) = compute_gae(&rewards, &values, &dones, g, l).map_err(|e| e.to_string())?;
                        let want = gae_unrolled(&rewards, &values, &dones, g, l);
                        for t in 0..len {
                            if (adv[t] - want[t]).abs() > TOL {
                                return Err(format!("r={rewards:?} v={values:?} d={dones:?} γ={g} λ={l} t={t}"));
                            }
                        }
                        cases += 1;
                    }
                }
            }
        }
    }

    // toy policy: 5 actions, logits = W·x, W is 5x2
    let eps = 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let w: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w_old: Vec<f64> = w.iter().map(|v| v + rng.random_range(-0.4..0.4)).collect();
    let n = 16;
    let xs: Vec<[f64; 2]> = (0..n).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let acts: Vec<usize> = (0..n).map(|_| rng.random_range(0..5)).collect();
    let adv: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -0.6 } * rng.random_range(0.5..2.0)).collect();
    let logits = |w: &[f64], x: &[f64; 2]| -> Vec<f64> { (0..5).map(|j| w[2 * j] * x[0] + w[2 * j + 1] * x[1]).collect() };
    let old: Vec<f64> = xs.iter().zip(&acts).map(|(x, &a)| log_softmax(&logits(&w_old, x))[a]).collect();
    let objective = |w: &[f64]| -> f64 {
        (0..n)
            .map(|i| ppo_clip_objective((log_softmax(&logits(w, &xs[i]))[acts[i]] - old[i]).exp(), adv[i], eps))
            .sum::<f64>()
            / n as f64
    };
    let mut grad = [0.0; 10];
    for i in 0..n {
        let lp = log_softmax(&logits(&w, &xs[i]));
        let r = (lp[acts[i]] - old[i]).exp();
        let g = ppo_clip_grad(r, adv[i], eps);
        for j in 0..5 {
            let dl = if j == acts[i] { 1.0 } else { 0.0 } - lp[j].exp();
            for k in 0..2 {
                grad[2 * j + k] += g * r * dl * xs[i][k] / n as f64;
            }
        }
    }
    let h = 1e-6;
    let mut worst = 0.0f64;
    for p in 0..10 {
        let (mut up, mut down) = (w.clone(), w.clone());
        up[p] += h;
        down[p] -= h;
        let fd = (objective(&up) - objective(&down)) / (2.0 * h);
        let rel = (grad[p] - fd).abs() / grad[p].abs().max(fd.abs()).max(1e-3);
        worst = worst.max(rel);
    }
    if worst > 1e-4 {
        return Err(format!("clip gradient relative error {worst:e}"));
    }
    Ok(format!("{cases} GAE trajectories; clip gradient max rel err {worst:.1e}"))
}

// ---------------------------------------------------------------- audit

fn parse_transcription(text: &str) -> Vec<(String, Vec<(String, Vec<String>)>)> {
    let mut out: Vec<(String, Vec<(String, Vec<String>)>)> = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(env) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.push((env.to_string(), Vec::new()));
            continue;
        }
        let (name, cells) = line.split_once('|').expect("`name | cells` row");
        let row = (name.trim().to_string(), cells.split_whitespace().map(String::from).collect());
        out.last_mut().expect("row before any [env]").1.push(row);
    }
    out
}

/// Rows of the base table in `dump-scales` output: `N. Name  c1 c2 ...`.
fn parse_dump(text: &str, tasks: usize) -> Vec<(String, Vec<String>)> {
    let mut rows = Vec::new();
    for line in text.lines().skip(2) {
        if line.starts_with('#') {
            break;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let split = tokens.len() - tasks;
        let name = tokens[1..split].join(" ");
        rows.push((name, tokens[split..].iter().map(|s| s.to_string()).collect()));
    }
    rows
}

fn scale_audit() -> Outcome {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let committed = std::fs::read_to_string(data.join("dump_scales.txt")).map_err(|e| e.to_string())?;
    let transcribed = parse_transcription(&std::fs::read_to_string(data.join("scale_tables.txt")).map_err(|e| e.to_string())?);
    let mut all = String::new();
    let mut cells = 0;
    for (env_name, table) in &transcribed {
        let env_id: EnvId = env_name.parse().map_err(|_| format!("unknown env {env_name}"))?;
        let out = Command::new(env!("CARGO_BIN_EXE_ecomarl"))
            .args(["dump-scales", "--env", env_name])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("dump-scales --env {env_name} exited with {}", out.status));
        }
        let text = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
        let dumped = parse_dump(&text, env_id.task_count());
        if dumped.len() != table.len() {
            return Err(format!("{env_name}: {} rows dumped, {} transcribed", dumped.len(), table.len()));
        }
        for ((dn, dc), (tn, tc)) in dumped.iter().zip(table) {
            if dn != tn || dc != tc {
                return Err(format!("{env_name}: dumped `{dn}` {dc:?} vs transcribed `{tn}` {tc:?}"));
            }
            cells += tc.len();
        }
        all.push_str(&text);
        all.push('\n');
    }
    if all != committed {
        return Err("dump-scales output differs from tests/data/dump_scales.txt".into());
    }
    Ok(format!("5 tables, {cells} cells match the transcription and the committed dump"))
}

// ---------------------------------------------------------------- learning

fn reference_trainer(env: EnvId, max_steps: u64) -> TrainerConfig {
    let mut t = parse_config(harness::builtin_config(env)).unwrap().train;
    t.max_steps = max_steps;
    t.summary_freq = max_steps;
    t
}

fn learning_trend_wfc() -> Outcome {
    let t0 = Instant::now();
    let mut finals = Vec::new();
    for seed in TREND_SEEDS {
        let env = EnvConfig::new(EnvId::Wfc).with_seed(seed).with_agents(1);
        let mut tr = Trainer::new(reference_trainer(EnvId::Wfc, WFC_TREND_STEPS), env, 1).map_err(|e| e.to_string())?;
        tr.run(|_| {}).map_err(|e| e.to_string())?;
        let cut = WFC_TREND_STEPS * 9 / 10;
        let (sum, n) = tr
            .chunks
            .iter()
            .filter(|c| c.end_step > cut)
            .fold((0.0, 0usize), |(s, n), c| (s + c.components[wfc::GENERATE_ENERGY] * c.transitions as f64, n + c.transitions));
        finals.push(sum / n.max(1) as f64);
    }
    let passing = finals.iter().filter(|&&e| e >= WFC_TREND_THRESHOLD).count();
    let detail = format!(
        "final-10% energy {} (need >= {WFC_TREND_THRESHOLD} on 2 of 3), {:.0} s",
        finals.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>().join(" / "),
        t0.elapsed().as_secs_f64()
    );
    if passing >= 2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn learning_trend_aws() -> Outcome {
    let t0 = Instant::now();
    let mut quartiles = Vec::new();
    for seed in TREND_SEEDS {
        let env = EnvConfig::new(EnvId::Aws).with_task(5).with_seed(seed);
        let mut tr = Trainer::new(reference_trainer(EnvId::Aws, AWS_TREND_STEPS), env, 1).map_err(|e| e.to_string())?;
        tr.run(|_| {}).map_err(|e| e.to_string())?;
        let mean = |lo: u64, hi: u64| {
            let xs: Vec<f64> = tr
                .episodes
                .iter()
                .filter(|e| e.end_step > lo && e.end_step <= hi)
                .map(|e| e.reward)
                .collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let q = AWS_TREND_STEPS / 4;
        quartiles.push((mean(0, q), mean(3 * q, AWS_TREND_STEPS)));
    }
    let rising = quartiles.iter().filter(|(a, b)| matches!((a, b), (Some(a), Some(b)) if b > a)).count();
    let fmt = |v: &Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.0}"));
    let detail = format!(
        "first -> last quartile episode reward {} ({rising} of 3 rising), {:.0} s",
        quartiles.iter().map(|(a, b)| format!("{} -> {}", fmt(a), fmt(b))).collect::<Vec<_>>().join(", "),
        t0.elapsed().as_secs_f64()
    );
    if rising >= 2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scalability() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let status = Command::new(env!("CARGO_BIN_EXE_ecomarl"))
        .args(["scale", "--env", "wfc", "--counts", SCALE_COUNTS, "--output"])
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?
        .status;
    if !status.success() {
        return Err(format!("scale exited with {status}"));
    }
    let rows: Vec<ScaleRow> = read_csv(&dir.path().join("scale_wfc.csv")).map_err(|e| e.to_string())?;
    if rows.len() != 6 {
        return Err(format!("{} rows, expected 6", rows.len()));
    }
    let finite = rows.iter().all(|r| {
        r.cumulative_reward.is_finite() && r.env_metric.is_finite() && r.seconds_per_env_step.is_finite()
    });
    if !finite {
        return Err("non-finite metric".into());
    }
    let per = |n: usize| rows.iter().find(|r| r.agents == n).map(|r| r.seconds_per_env_step);
    let (one, sixteen) = (per(1).ok_or("no 1-agent row")?, per(16).ok_or("no 16-agent row")?);
    let ratio = sixteen / one;
    let detail = format!("6 rows, step time ratio 16/1 = {ratio:.2} (limit {SCALE_RATIO_LIMIT})");
    if ratio <= SCALE_RATIO_LIMIT {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- runner

fn main() -> ExitCode {
    let criteria: &[(&str, fn() -> Outcome)] = &[
        ("derived-oracles", derived_oracles),
        ("range-fuzz", range_fuzz),
        ("wrm-conservation", wrm_conservation),
        ("shape-conformance", shape_conformance),
        ("determinism-replay", determinism),
        ("gae-and-clip-oracles", gae_and_clip),
        ("task-scale-audit", scale_audit),
        ("learning-trend-wfc", learning_trend_wfc),
        ("learning-trend-aws-task5", learning_trend_aws),
        ("scalability-wfc", scalability),
    ];
    let mut unexpected = Vec::new();
    for (name, run) in criteria {
        let gap = KNOWN_GAPS.iter().find(|(g, _)| g == name);
        match run() {
            Ok(detail) => {
                let note = if gap.is_some() { " (listed as a known gap)" } else { "" };
                println!("PASS {name}: {detail}{note}");
            }
            Err(detail) => match gap {
                Some((_, why)) => println!("FAIL {name}: {detail} [known gap: {why}]"),
                None => {
                    println!("FAIL {name}: {detail}");
                    unexpected.push(*name);
                }
            },
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria pass except listed known gaps");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
