//! Train/test grids, the agent-count sweep and the dump/export helpers.

use std::path::{Path, PathBuf};

use ecomarl_core::ppo::checkpoint::Checkpoint;
use ecomarl_core::ppo::trainer::Summary;
use ecomarl_core::ppo::{Trainer, TrainerConfig};
use ecomarl_core::worldgen::export::matrix_to_string;
use ecomarl_core::worldgen::{generate_terrain, FieldKind, ScalarField};
use ecomarl_core::{EnvConfig, EnvId, RewardScaleMatrix, ScenarioKind};
use rayon::prelude::*;

use crate::config::{parse_config, Mode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::metrics::{read_csv, summarize, write_csv, AggregateRow, MetricsRow, ScaleRow, TimingRow};

pub const OUTPUT_ENV: &str = "ECOMARL_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "ecomarl-out";

/// `explicit`, else `$ECOMARL_OUTPUT_DIR`, else `./ecomarl-out`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUTPUT), PathBuf::from),
    }
}

/// Reference config shipped for each environment.
pub fn builtin_config(env: EnvId) -> &'static str {
    match env {
        EnvId::Wfc => include_str!("../configs/wfc.yaml"),
        EnvId::Wrm => include_str!("../configs/wrm.yaml"),
        EnvId::Opc => include_str!("../configs/opc.yaml"),
        EnvId::Dbr => include_str!("../configs/dbr.yaml"),
        EnvId::Aws => include_str!("../configs/aws.yaml"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub task: usize,
    pub scenario: Option<u32>,
    pub repeat: usize,
}

impl Cell {
    pub fn id(&self, env: EnvId) -> String {
        let scenario = match (env.scenario_kind(), self.scenario) {
            (ScenarioKind::Pattern, Some(p)) => format!("_pattern{p}"),
            (ScenarioKind::TerrainLevel, Some(l)) => format!("_level{l}"),
            _ => String::new(),
        };
        format!("task{}{scenario}_rep{}", self.task, self.repeat)
    }
}

/// Grid cells in task-major, then scenario, then repeat order.
pub fn cells(config: &RunConfig) -> Vec<Cell> {
    let mut out = Vec::with_capacity(config.cell_count());
    for &task in &config.tasks {
        for &scenario in &config.scenarios {
            for repeat in 0..config.repeats {
                out.push(Cell { task, scenario, repeat });
            }
        }
    }
    out
}

/// Where test runs take their policy from.
#[derive(Debug, Clone)]
pub enum PolicySource {
    /// Train each cell first.
    Train,
    /// One checkpoint for every cell.
    File(PathBuf),
    /// `<dir>/<cell id>.ckpt` per cell.
    Dir(PathBuf),
}

impl PolicySource {
    pub fn from_path(p: &Path) -> Self {
        if p.is_dir() {
            PolicySource::Dir(p.to_path_buf())
        } else {
            PolicySource::File(p.to_path_buf())
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GridReport {
    pub out_dir: PathBuf,
    pub cells: usize,
    pub ran: usize,
    pub skipped: usize,
    /// `(cell id, reason)`.
    pub failed: Vec<(String, String)>,
}

struct Layout {
    root: PathBuf,
}

impl Layout {
    fn runs(&self) -> PathBuf {
        self.root.join("runs")
    }

    fn metrics(&self, id: &str, mode: Mode) -> PathBuf {
        self.runs().join(format!("{id}_{}.csv", mode.as_str()))
    }

    fn timing(&self, id: &str) -> PathBuf {
        self.runs().join(format!("{id}_timing.csv"))
    }

    fn failure(&self, id: &str) -> PathBuf {
        self.runs().join(format!("{id}.failed"))
    }

    fn checkpoint(&self, id: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("{id}.ckpt"))
    }
}

fn metrics_row(config: &RunConfig, cell: &Cell, mode: Mode, seed: u64, s: &Summary) -> MetricsRow {
    MetricsRow {
        env: config.env_id.short_name().to_string(),
        task: cell.task,
        scenario: cell.scenario,
        mode: mode.as_str().to_string(),
        seed,
        repeat: cell.repeat,
        step: s.step,
        cumulative_reward: s.cumulative_reward,
        env_metric: s.env_metric,
        episodes: s.episodes,
        learning_rate: s.learning_rate,
        policy_loss: s.loss.policy_loss,
        value_loss: s.loss.value_loss,
        entropy: s.loss.entropy,
    }
}

fn run_mode(
    config: &RunConfig,
    cell: &Cell,
    mode: Mode,
    start: Option<&Checkpoint>,
) -> CliResult<(Trainer, Vec<MetricsRow>)> {
    let seed = config.seed(mode, cell.repeat);
    let env = EnvConfig::new(config.env_id)
        .with_task(cell.task)
        .with_scenario(cell.scenario)
        .with_seed(seed);
    let mut trainer = Trainer::new(config.trainer(mode).clone(), env, config.num_envs)?;
    if let Some(ck) = start {
        trainer.restore(ck)?;
    }
    let mut rows = Vec::new();
    trainer.run(|s| rows.push(metrics_row(config, cell, mode, seed, s)))?;
    if let Some(bad) = rows.iter().find(|r| !(r.cumulative_reward.is_finite() && r.env_metric.is_finite())) {
        return Err(CliError::Runtime(format!("non-finite metrics at step {}", bad.step)));
    }
    Ok((trainer, rows))
}

fn timing_row(id: &str, mode: Mode, t: &Trainer) -> TimingRow {
    TimingRow {
        run: id.to_string(),
        mode: mode.as_str().to_string(),
        collect_seconds: t.timing.collect_seconds,
        update_seconds: t.timing.update_seconds,
        env_steps: t.timing.env_steps,
    }
}

fn save_checkpoint(ck: &Checkpoint, path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("ckpt.tmp");
    ck.save(&tmp)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn run_cell(config: &RunConfig, cell: &Cell, layout: &Layout, source: &PolicySource) -> CliResult<()> {
    let id = cell.id(config.env_id);
    let mut timing = Vec::new();
    let policy = match source {
        PolicySource::Train => {
            let (trainer, rows) = run_mode(config, cell, Mode::Train, None)?;
            let ck = trainer.checkpoint();
            save_checkpoint(&ck, &layout.checkpoint(&id))?;
            write_csv(&layout.metrics(&id, Mode::Train), &rows)?;
            timing.push(timing_row(&id, Mode::Train, &trainer));
            ck
        }
        PolicySource::File(p) => Checkpoint::load(p)?,
        PolicySource::Dir(d) => Checkpoint::load(&d.join(format!("{id}.ckpt")))?,
    };
    let (trainer, rows) = run_mode(config, cell, Mode::Test, Some(&policy))?;
    timing.push(timing_row(&id, Mode::Test, &trainer));
    write_csv(&layout.timing(&id), &timing)?;
    // written last: its presence marks the cell complete
    write_csv(&layout.metrics(&id, Mode::Test), &rows)?;
    Ok(())
}

fn aggregate_row(config: &RunConfig, cell: &Cell, layout: &Layout) -> CliResult<AggregateRow> {
    let id = cell.id(config.env_id);
    let mut row = AggregateRow {
        env: config.env_id.short_name().to_string(),
        task: cell.task,
        scenario: cell.scenario,
        repeat: cell.repeat,
        train_seed: config.seed(Mode::Train, cell.repeat),
        test_seed: config.seed(Mode::Test, cell.repeat),
        status: "missing".to_string(),
        train_reward: None,
        train_metric: None,
        test_reward: None,
        test_metric: None,
    };
    let train_path = layout.metrics(&id, Mode::Train);
    if train_path.exists() {
        let rows: Vec<MetricsRow> = read_csv(&train_path)?;
        if let Some(last) = rows.last() {
            row.train_reward = Some(last.cumulative_reward);
            row.train_metric = Some(last.env_metric);
        }
    }
    let test_path = layout.metrics(&id, Mode::Test);
    if test_path.exists() {
        let rows: Vec<MetricsRow> = read_csv(&test_path)?;
        let n = rows.len().max(1) as f64;
        row.test_reward = Some(rows.iter().map(|r| r.cumulative_reward).sum::<f64>() / n);
        row.test_metric = Some(rows.iter().map(|r| r.env_metric).sum::<f64>() / n);
        row.status = "ok".to_string();
    } else if let Ok(reason) = std::fs::read_to_string(layout.failure(&id)) {
        row.status = format!("failed: {}", reason.trim());
    }
    Ok(row)
}

/// Runs every (task, scenario, repeat) cell of `config` into `out_dir`.
///
/// Cells whose test CSV already exists are skipped. A failing cell is
/// recorded in `runs/<id>.failed` and in the aggregate, and the remaining
/// cells still run.
pub fn run_grid(config: &RunConfig, out_dir: &Path, source: &PolicySource) -> CliResult<GridReport> {
    let layout = Layout {
        root: out_dir.to_path_buf(),
    };
    std::fs::create_dir_all(layout.runs())?;
    let cells = cells(config);
    let outcomes: Vec<Option<CliResult<()>>> = cells
        .par_iter()
        .map(|cell| {
            let id = cell.id(config.env_id);
            if layout.metrics(&id, Mode::Test).exists() {
                return None;
            }
            let _ = std::fs::remove_file(layout.failure(&id));
            let result = run_cell(config, cell, &layout, source);
            if let Err(e) = &result {
                log::error!("{id}: {e}");
                if let Err(io) = std::fs::write(layout.failure(&id), e.to_string()) {
                    log::error!("{id}: cannot record failure: {io}");
                }
            }
            Some(result)
        })
        .collect();

    let mut report = GridReport {
        out_dir: out_dir.to_path_buf(),
        cells: cells.len(),
        ..Default::default()
    };
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            None => report.skipped += 1,
            Some(Ok(())) => report.ran += 1,
            Some(Err(e)) => report.failed.push((cell.id(config.env_id), e.to_string())),
        }
    }

    let rows = cells
        .iter()
        .map(|c| aggregate_row(config, c, &layout))
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(&out_dir.join("aggregate.csv"), &rows)?;
    write_csv(&out_dir.join("summary.csv"), &summarize(&rows))?;
    let mut timing = Vec::new();
    for c in &cells {
        let p = layout.timing(&c.id(config.env_id));
        if p.exists() {
            timing.extend(read_csv::<TimingRow>(&p)?);
        }
    }
    write_csv(&out_dir.join("timing.csv"), &timing)?;
    Ok(report)
}

/// Loads a config file, logging its warnings.
pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let config = parse_config(&text)?;
    for w in &config.warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(config)
}

#[derive(Debug, Clone)]
pub struct ScaleOptions {
    /// Vectorized steps per agent count.
    pub env_steps: u64,
    pub seed: u64,
    pub task: usize,
    /// Trainer settings; the reference config of the env when `None`.
    pub trainer: Option<TrainerConfig>,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        Self {
            env_steps: 500,
            seed: 5000,
            task: 0,
            trainer: None,
        }
    }
}

/// Trains for `env_steps` vectorized steps at each agent count and reports
/// reward, metric and the collection time per step (updates excluded).
pub fn run_scalability(env: EnvId, counts: &[usize], opts: &ScaleOptions) -> CliResult<Vec<ScaleRow>> {
    if !env.supports_agent_override() {
        return Err(CliError::config(format!(
            "{} ({env}) is excluded from scalability tests: its agent count is fixed by the scenario",
            env.full_name()
        )));
    }
    if counts.is_empty() || counts.contains(&0) {
        return Err(CliError::config("agent counts must be a non-empty list of positive numbers"));
    }
    if opts.env_steps == 0 {
        return Err(CliError::config("env_steps must be positive"));
    }
    let base = match &opts.trainer {
        Some(t) => t.clone(),
        None => parse_config(builtin_config(env))?.train,
    };
    let mut rows = Vec::with_capacity(counts.len());
    for &n in counts {
        let agent_steps = opts.env_steps * n as u64;
        let trainer_config = TrainerConfig {
            max_steps: agent_steps,
            summary_freq: agent_steps,
            ..base.clone()
        };
        let env_config = EnvConfig::new(env).with_task(opts.task).with_seed(opts.seed).with_agents(n);
        let mut trainer = Trainer::new(trainer_config, env_config, 1)?;
        let mut last = None;
        trainer.run(|s| last = Some(s.clone()))?;
        let s = last.ok_or_else(|| CliError::Runtime(format!("no summary for {n} agents")))?;
        let t = &trainer.timing;
        let per_step = t.collect_seconds / t.env_steps.max(1) as f64;
        rows.push(ScaleRow {
            env: env.short_name().to_string(),
            agents: n,
            env_steps: t.env_steps,
            agent_steps: trainer.steps(),
            cumulative_reward: s.cumulative_reward,
            env_metric: s.env_metric,
            collect_seconds: t.collect_seconds,
            seconds_per_env_step: per_step,
            agent_steps_per_second: trainer.steps() as f64 / t.collect_seconds.max(f64::MIN_POSITIVE),
        });
    }
    Ok(rows)
}

pub fn dump_scales(env: EnvId) -> String {
    RewardScaleMatrix::for_env(env).render()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldExport {
    Terrain,
    Field(FieldKind),
}

impl std::str::FromStr for FieldExport {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        if s.eq_ignore_ascii_case("terrain") {
            return Ok(FieldExport::Terrain);
        }
        s.parse::<FieldKind>()
            .map(FieldExport::Field)
            .map_err(|_| CliError::config(format!("unknown field kind `{s}`; use terrain, wind, temperature, humidity or overcast")))
    }
}

#[derive(Debug, Clone)]
pub struct ExportOptions {
    pub seed: u64,
    /// Terrain elevation level.
    pub level: u32,
    /// Samples per side for noise fields.
    pub size: usize,
    /// Time (steps) for noise fields.
    pub time: f64,
    pub half_extent: f64,
}

/// A generated grid as row-major text, row 0 at the most negative y.
pub fn export_field(kind: FieldExport, opts: &ExportOptions) -> CliResult<String> {
    if opts.half_extent <= 0.0 || !opts.half_extent.is_finite() {
        return Err(CliError::config("half extent must be positive"));
    }
    match kind {
        FieldExport::Terrain => {
            let t = generate_terrain(opts.level, opts.seed, opts.half_extent)?;
            Ok(matrix_to_string(&t.heights, t.resolution))
        }
        FieldExport::Field(k) => {
            if opts.size < 2 {
                return Err(CliError::config("size must be at least 2"));
            }
            let f = ScalarField::new(k, opts.seed, opts.half_extent);
            Ok(matrix_to_string(&f.grid(opts.size, opts.time), opts.size))
        }
    }
}
