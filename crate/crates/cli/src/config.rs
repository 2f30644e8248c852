//! Run configuration built from a parsed config document.

use std::fmt::Display;
use std::str::FromStr;

use ecomarl_core::ppo::{CuriosityConfig, LrSchedule, TrainerConfig, VisEncodeType};
use ecomarl_core::{EnvId, ScenarioKind};

use crate::error::{CliError, CliResult};
use crate::yaml::{self, Entry, Value};

pub const DEFAULT_TRAIN_SEED: u64 = 5000;
/// Offset from the train seed when no test seed is given.
pub const TEST_SEED_OFFSET: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Test,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Train => "train",
            Mode::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env_id: EnvId,
    pub train: TrainerConfig,
    /// Training values with `# testing:` overrides applied and learning
    /// frozen.
    pub test: TrainerConfig,
    pub tasks: Vec<usize>,
    /// Patterns or terrain levels; a single `None` for envs without either.
    pub scenarios: Vec<Option<u32>>,
    pub repeats: usize,
    pub num_envs: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn trainer(&self, mode: Mode) -> &TrainerConfig {
        match mode {
            Mode::Train => &self.train,
            Mode::Test => &self.test,
        }
    }

    pub fn seed(&self, mode: Mode, repeat: usize) -> u64 {
        let base = match mode {
            Mode::Train => self.train_seed,
            Mode::Test => self.test_seed,
        };
        base + repeat as u64
    }

    /// Number of (task, scenario, repeat) cells.
    pub fn cell_count(&self) -> usize {
        self.tasks.len() * self.scenarios.len() * self.repeats
    }

    pub fn set_max_steps(&mut self, train: Option<u64>, test: Option<u64>) {
        if let Some(n) = train {
            self.train.max_steps = n;
        }
        if let Some(n) = test.or(train) {
            self.test.max_steps = n;
        }
    }
}

struct Setting<T> {
    value: T,
    testing: Option<T>,
}

struct Section<'a> {
    path: String,
    entries: &'a [Entry],
    line: usize,
}

fn convert<T: FromStr>(line: usize, key: &str, raw: &str) -> CliResult<T>
where
    T::Err: Display,
{
    raw.parse()
        .map_err(|e| CliError::parse(line, format!("invalid value `{raw}` for `{key}`: {e}")))
}

fn parse_bool(line: usize, key: &str, raw: &str) -> CliResult<bool> {
    match raw {
        "true" | "True" => Ok(true),
        "false" | "False" => Ok(false),
        _ => Err(CliError::parse(line, format!("`{key}` expects true or false, got `{raw}`"))),
    }
}

impl<'a> Section<'a> {
    fn root(entries: &'a [Entry]) -> Self {
        Self {
            path: String::new(),
            entries,
            line: 1,
        }
    }

    fn qualified(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn missing(&self, key: &str) -> CliError {
        CliError::parse(self.line, format!("missing required key `{}`", self.qualified(key)))
    }

    fn sub(&self, key: &str) -> CliResult<Option<Section<'a>>> {
        let Some(e) = yaml::find(self.entries, key) else {
            return Ok(None);
        };
        match &e.value {
            Value::Map(m) => Ok(Some(Section {
                path: self.qualified(key),
                entries: m,
                line: e.line,
            })),
            _ => Err(CliError::parse(e.line, format!("`{}` must be a section", self.qualified(key)))),
        }
    }

    fn require_sub(&self, key: &str) -> CliResult<Section<'a>> {
        self.sub(key)?.ok_or_else(|| self.missing(key))
    }

    fn raw(&self, key: &str) -> CliResult<Option<(&'a Entry, &'a str)>> {
        let Some(e) = yaml::find(self.entries, key) else {
            return Ok(None);
        };
        match &e.value {
            Value::Scalar(s) => Ok(Some((e, s.as_str()))),
            _ => Err(CliError::parse(e.line, format!("`{}` must be a single value", self.qualified(key)))),
        }
    }

    fn scalar_with<T>(&self, key: &str, f: impl Fn(usize, &str, &str) -> CliResult<T>) -> CliResult<Option<Setting<T>>> {
        let Some((e, raw)) = self.raw(key)? else {
            return Ok(None);
        };
        let value = f(e.line, key, raw)?;
        let testing = e.testing.as_deref().map(|t| f(e.line, key, t)).transpose()?;
        Ok(Some(Setting { value, testing }))
    }

    fn scalar<T: FromStr>(&self, key: &str) -> CliResult<Option<Setting<T>>>
    where
        T::Err: Display,
    {
        self.scalar_with(key, convert::<T>)
    }

    fn require<T: FromStr>(&self, key: &str) -> CliResult<Setting<T>>
    where
        T::Err: Display,
    {
        self.scalar(key)?.ok_or_else(|| self.missing(key))
    }

    fn list<T: FromStr>(&self, key: &str) -> CliResult<Option<(usize, Vec<T>)>>
    where
        T::Err: Display,
    {
        let Some(e) = yaml::find(self.entries, key) else {
            return Ok(None);
        };
        let Value::List(items) = &e.value else {
            return Err(CliError::parse(e.line, format!("`{}` must be a list like [0, 1]", self.qualified(key))));
        };
        if items.is_empty() {
            return Err(CliError::parse(e.line, format!("`{}` is empty", self.qualified(key))));
        }
        let parsed = items.iter().map(|s| convert(e.line, key, s)).collect::<CliResult<Vec<T>>>()?;
        Ok(Some((e.line, parsed)))
    }

    fn warn_unknown(&self, known: &[&str], warnings: &mut Vec<String>) {
        for e in self.entries {
            if !known.contains(&e.key.as_str()) {
                warnings.push(format!("line {}: unknown key `{}` ignored", e.line, self.qualified(&e.key)));
            }
        }
    }
}

/// Finds the environment named in an install path such as
/// `/envs/WindFarmControl`.
pub fn infer_env(path: &str) -> Option<EnvId> {
    let lower = path.to_ascii_lowercase();
    EnvId::ALL.into_iter().find(|id| {
        let name: String = id.full_name().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        lower.contains(&name.to_ascii_lowercase())
    })
}

fn parse_curiosity(s: &Section<'_>, warnings: &mut Vec<String>) -> CliResult<CuriosityConfig> {
    s.warn_unknown(
        &["gamma", "strength", "encoding_size", "learning_rate", "network_settings"],
        warnings,
    );
    let strength = s.require::<f64>("strength")?;
    let lr = s.require::<f64>("learning_rate")?;
    let gamma = s.scalar::<f64>("gamma")?.map_or(0.99, |g| g.value);
    let encoding_size = s.scalar::<usize>("encoding_size")?.map_or(256, |v| v.value);
    Ok(CuriosityConfig {
        gamma,
        strength: strength.value,
        encoding_size,
        learning_rate: lr.value,
    })
}

/// Parses and validates a run configuration.
pub fn parse_config(text: &str) -> CliResult<RunConfig> {
    let top = yaml::parse(text)?;
    let root = Section::root(&top);
    let mut warnings = Vec::new();
    root.warn_unknown(
        &["behaviors", "engine_settings", "env_settings", "environment_parameters", "harness"],
        &mut warnings,
    );

    let behaviors = root.require_sub("behaviors")?;
    let behavior = match behaviors.entries {
        [one] => behaviors.require_sub(&one.key)?,
        [] => return Err(CliError::parse(behaviors.line, "`behaviors` names no behavior")),
        [_, second, ..] => {
            return Err(CliError::parse(second.line, "only one behavior per config is supported"));
        }
    };
    behavior.warn_unknown(
        &[
            "trainer_type",
            "hyperparameters",
            "network_settings",
            "reward_signals",
            "keep_checkpoints",
            "max_steps",
            "time_horizon",
            "summary_freq",
            "threaded",
        ],
        &mut warnings,
    );
    if let Some((e, kind)) = behavior.raw("trainer_type")? {
        if kind != "ppo" {
            return Err(CliError::parse(e.line, format!("trainer_type `{kind}` is not supported; use ppo")));
        }
    }

    let hp = behavior.require_sub("hyperparameters")?;
    hp.warn_unknown(
        &[
            "batch_size",
            "buffer_size",
            "learning_rate",
            "beta",
            "epsilon",
            "lambd",
            "num_epoch",
            "learning_rate_schedule",
        ],
        &mut warnings,
    );
    let batch_size = hp.require::<usize>("batch_size")?;
    let buffer_size = hp.require::<usize>("buffer_size")?;
    let learning_rate = hp.require::<f64>("learning_rate")?;
    let beta = hp.require::<f64>("beta")?;
    let epsilon = hp.require::<f64>("epsilon")?;
    let lambd = hp.require::<f64>("lambd")?;
    let num_epoch = hp.require::<usize>("num_epoch")?;
    let schedule = hp.scalar::<LrSchedule>("learning_rate_schedule")?;

    let net = behavior.require_sub("network_settings")?;
    net.warn_unknown(&["normalize", "hidden_units", "num_layers", "vis_encode_type"], &mut warnings);
    let normalize = net.scalar_with("normalize", parse_bool)?.map_or(false, |s| s.value);
    let hidden_units = net.require::<usize>("hidden_units")?;
    let num_layers = net.require::<usize>("num_layers")?;
    let vis_encode_type = net.scalar::<VisEncodeType>("vis_encode_type")?;

    let signals = behavior.require_sub("reward_signals")?;
    signals.warn_unknown(&["extrinsic", "curiosity"], &mut warnings);
    let extrinsic = signals.require_sub("extrinsic")?;
    extrinsic.warn_unknown(&["gamma", "strength", "network_settings"], &mut warnings);
    let gamma = extrinsic.require::<f64>("gamma")?;
    let strength = extrinsic.scalar::<f64>("strength")?;
    let curiosity = signals.sub("curiosity")?.map(|s| parse_curiosity(&s, &mut warnings)).transpose()?;

    let max_steps = behavior.require::<u64>("max_steps")?;
    let time_horizon = behavior.require::<usize>("time_horizon")?;
    let summary_freq = behavior.require::<u64>("summary_freq")?;
    let keep_checkpoints = behavior.scalar::<usize>("keep_checkpoints")?;
    behavior.scalar_with("threaded", parse_bool)?;

    if let Some(engine) = root.sub("engine_settings")? {
        engine.warn_unknown(&["no_graphics"], &mut warnings);
        engine.scalar_with("no_graphics", parse_bool)?;
    }

    let env_settings = root.require_sub("env_settings")?;
    env_settings.warn_unknown(&["env_path", "env", "seed", "num_envs"], &mut warnings);
    let env_id = match (env_settings.raw("env")?, env_settings.raw("env_path")?) {
        (Some((e, name)), _) => convert::<EnvId>(e.line, "env", name)?,
        (None, Some((e, path))) => infer_env(path)
            .ok_or_else(|| CliError::parse(e.line, format!("cannot tell which environment `{path}` is")))?,
        (None, None) => return Err(env_settings.missing("env_path")),
    };
    let seed = env_settings.scalar::<u64>("seed")?;
    let num_envs = env_settings.scalar::<usize>("num_envs")?.map_or(1, |s| s.value);
    if num_envs == 0 {
        return Err(CliError::config("env_settings.num_envs must be at least 1"));
    }

    let params = root.require_sub("environment_parameters")?;
    params.warn_unknown(&["task", "pattern", "terrain_level"], &mut warnings);
    let (task_line, tasks) = params.list::<usize>("task")?.ok_or_else(|| params.missing("task"))?;
    if let Some(t) = tasks.iter().find(|&&t| t >= env_id.task_count()) {
        return Err(CliError::parse(
            task_line,
            format!("task {t} out of range: {env_id} has tasks 0-{}", env_id.task_count() - 1),
        ));
    }
    let scenarios = match env_id.scenario_kind() {
        ScenarioKind::Pattern => scenario_list(&params, "pattern", 0..=8, "terrain_level")?,
        ScenarioKind::TerrainLevel => scenario_list(&params, "terrain_level", 1..=10, "pattern")?,
        ScenarioKind::None => {
            for key in ["pattern", "terrain_level"] {
                if let Some(e) = yaml::find(params.entries, key) {
                    return Err(CliError::parse(e.line, format!("{env_id} takes no `{key}`")));
                }
            }
            vec![None]
        }
    };

    let mut repeats = 3;
    if let Some(h) = root.sub("harness")? {
        h.warn_unknown(&["repeats"], &mut warnings);
        if let Some(r) = h.scalar::<usize>("repeats")? {
            if r.value == 0 {
                return Err(CliError::parse(h.line, "harness.repeats must be at least 1"));
            }
            repeats = r.value;
        }
    }

    let train = TrainerConfig {
        batch_size: batch_size.value,
        buffer_size: buffer_size.value,
        learning_rate: learning_rate.value,
        lr_schedule: schedule.as_ref().map_or(LrSchedule::Linear, |s| s.value),
        beta: beta.value,
        epsilon: epsilon.value,
        lambd: lambd.value,
        num_epoch: num_epoch.value,
        normalize,
        hidden_units: hidden_units.value,
        num_layers: num_layers.value,
        vis_encode_type: vis_encode_type.map_or(VisEncodeType::Simple, |v| v.value),
        gamma: gamma.value,
        extrinsic_strength: strength.map_or(1.0, |s| s.value),
        curiosity,
        max_steps: max_steps.value,
        time_horizon: time_horizon.value,
        summary_freq: summary_freq.value,
        keep_checkpoints: keep_checkpoints.map_or(5, |k| k.value),
    };
    train.validate()?;
    let continuous = env_id.default_spec().continuous_actions > 0;
    warnings.extend(train.range_warnings(continuous));

    let mut test = train.clone();
    test.max_steps = max_steps.testing.unwrap_or(max_steps.value);
    test.summary_freq = summary_freq.testing.unwrap_or(summary_freq.value);
    test.learning_rate = 0.0;
    test.lr_schedule = LrSchedule::Constant;
    if let Some(c) = test.curiosity.as_mut() {
        c.learning_rate = 0.0;
    }
    test.validate()?;

    let train_seed = seed.as_ref().map_or(DEFAULT_TRAIN_SEED, |s| s.value);
    let test_seed = seed
        .as_ref()
        .and_then(|s| s.testing)
        .unwrap_or(train_seed + TEST_SEED_OFFSET);

    Ok(RunConfig {
        env_id,
        train,
        test,
        tasks,
        scenarios,
        repeats,
        num_envs,
        train_seed,
        test_seed,
        warnings,
    })
}

fn scenario_list(
    params: &Section<'_>,
    key: &str,
    range: std::ops::RangeInclusive<u32>,
    other: &str,
) -> CliResult<Vec<Option<u32>>> {
    if let Some(e) = yaml::find(params.entries, other) {
        return Err(CliError::parse(e.line, format!("`{other}` does not apply here; use `{key}`")));
    }
    let (line, values) = params.list::<u32>(key)?.ok_or_else(|| params.missing(key))?;
    if let Some(v) = values.iter().find(|v| !range.contains(v)) {
        return Err(CliError::parse(
            line,
            format!("{key} {v} outside [{}, {}]", range.start(), range.end()),
        ));
    }
    Ok(values.into_iter().map(Some).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
behaviors:
  Agent:
    trainer_type: ppo
    hyperparameters:
      batch_size: 64
      buffer_size: 2048
      learning_rate: 0.0003 # testing: 0.0
      beta: 0.005
      epsilon: 0.2
      lambd: 0.95
      num_epoch: 3
    network_settings:
      hidden_units: 64
      num_layers: 2
    reward_signals:
      extrinsic:
        gamma: 0.9
    max_steps: 600000 # testing: 1000
    time_horizon: 128
    summary_freq: 1000
env_settings:
  env: opc
environment_parameters:
  task: [0, 3]
";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.env_id, EnvId::Opc);
        assert_eq!(c.tasks, vec![0, 3]);
        assert_eq!(c.scenarios, vec![None]);
        assert_eq!(c.train_seed, 5000);
        assert_eq!(c.test_seed, 6000);
        assert_eq!(c.test.max_steps, 1000);
        assert_eq!(c.train.max_steps, 600000);
        assert_eq!(c.test.learning_rate, 0.0);
        assert_eq!(c.test.lr_schedule, LrSchedule::Constant);
        assert!(c.warnings.is_empty(), "{:?}", c.warnings);
    }

    #[test]
    fn missing_key_reports_section_line() {
        let doc = MINIMAL.replace("      beta: 0.005\n", "");
        match parse_config(&doc) {
            Err(CliError::Parse { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("hyperparameters.beta"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_enum_and_ranges_are_parse_errors() {
        let cases = [
            (MINIMAL.replace("num_epoch: 3", "num_epoch: 3\n      learning_rate_schedule: cosine"), 12),
            (MINIMAL.replace("task: [0, 3]", "task: [0, 4]"), 24),
            (MINIMAL.replace("task: [0, 3]", "task: []"), 24),
            (MINIMAL.replace("trainer_type: ppo", "trainer_type: sac"), 3),
            (MINIMAL.replace("env: opc", "env: wfc").replace("[0, 3]", "[0, 1]"), 23),
        ];
        for (doc, line) in cases {
            match parse_config(&doc) {
                Err(CliError::Parse { line: l, .. }) => assert_eq!(l, line, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_keys_warn_with_line() {
        let doc = MINIMAL.replace("    time_horizon: 128", "    time_horizon: 128\n    frobnicate: 1");
        let c = parse_config(&doc).unwrap();
        assert_eq!(c.warnings, vec!["line 20: unknown key `behaviors.Agent.frobnicate` ignored".to_string()]);
    }

    #[test]
    fn env_inferred_from_install_path() {
        assert_eq!(infer_env("/envs/Suite_WindFarmControl_win"), Some(EnvId::Wfc));
        assert_eq!(infer_env("/envs/DroneBasedReforestation"), Some(EnvId::Dbr));
        assert_eq!(infer_env("/envs/other"), None);
    }
}
