//! CSV records written by the harness.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliResult;

/// One summary point of a train or test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub env: String,
    pub task: usize,
    /// Pattern or terrain level; empty when the env has neither.
    pub scenario: Option<u32>,
    pub mode: String,
    pub seed: u64,
    pub repeat: usize,
    pub step: u64,
    pub cumulative_reward: f64,
    pub env_metric: f64,
    pub episodes: usize,
    pub learning_rate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// One grid cell: a train run followed by a test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub env: String,
    pub task: usize,
    pub scenario: Option<u32>,
    pub repeat: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    /// `ok` or `failed: <reason>`.
    pub status: String,
    pub train_reward: Option<f64>,
    pub train_metric: Option<f64>,
    pub test_reward: Option<f64>,
    pub test_metric: Option<f64>,
}

/// Mean and sample standard deviation over repeats of one (task, scenario).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub env: String,
    pub task: usize,
    pub scenario: Option<u32>,
    pub runs: usize,
    pub completed: usize,
    pub train_reward_mean: Option<f64>,
    pub train_reward_std: Option<f64>,
    pub test_reward_mean: Option<f64>,
    pub test_reward_std: Option<f64>,
    pub test_metric_mean: Option<f64>,
    pub test_metric_std: Option<f64>,
}

/// Wall time, kept apart from the metric files so those stay reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub run: String,
    pub mode: String,
    pub collect_seconds: f64,
    pub update_seconds: f64,
    pub env_steps: u64,
}

/// One agent count of a scalability sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub env: String,
    pub agents: usize,
    pub env_steps: u64,
    pub agent_steps: u64,
    pub cumulative_reward: f64,
    pub env_metric: f64,
    pub collect_seconds: f64,
    pub seconds_per_env_step: f64,
    pub agent_steps_per_second: f64,
}

/// Arithmetic mean and sample (n−1) standard deviation. The deviation is
/// `None` below two samples; both are `None` for an empty slice.
pub fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

/// Groups aggregate rows by (task, scenario), keeping first-seen order.
pub fn summarize(rows: &[AggregateRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Option<u32>)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.task, r.scenario)) {
            keys.push((r.task, r.scenario));
        }
    }
    keys.into_iter()
        .map(|(task, scenario)| {
            let group: Vec<&AggregateRow> = rows.iter().filter(|r| r.task == task && r.scenario == scenario).collect();
            let pick = |f: fn(&AggregateRow) -> Option<f64>| group.iter().filter_map(|r| f(r)).collect::<Vec<_>>();
            let train = mean_std(&pick(|r| r.train_reward));
            let test = mean_std(&pick(|r| r.test_reward));
            let metric = mean_std(&pick(|r| r.test_metric));
            SummaryRow {
                env: group[0].env.clone(),
                task,
                scenario,
                runs: group.len(),
                completed: group.iter().filter(|r| r.status == "ok").count(),
                train_reward_mean: train.0,
                train_reward_std: train.1,
                test_reward_mean: test.0,
                test_reward_std: test.1,
                test_metric_mean: metric.0,
                test_metric_std: metric.1,
            }
        })
        .collect()
}

/// Writes `rows` to `path` through a temporary file and a rename, so a
/// present file is always complete.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_std_uses_n_minus_one() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, Some(2.5));
        assert!((s.unwrap() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (Some(7.0), None));
        assert_eq!(mean_std(&[]), (None, None));
    }

    #[test]
    fn csv_roundtrip_keeps_empty_options() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let rows = vec![AggregateRow {
            env: "opc".into(),
            task: 1,
            scenario: None,
            repeat: 0,
            train_seed: 5000,
            test_seed: 6000,
            status: "failed: boom".into(),
            train_reward: Some(1.5),
            train_metric: None,
            test_reward: None,
            test_metric: None,
        }];
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv::<AggregateRow>(&path).unwrap(), rows);
        assert!(!path.with_extension("csv.tmp").exists());
    }
}
