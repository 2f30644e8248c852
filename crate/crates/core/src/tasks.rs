//! Per-environment task reward-scale matrices and final reward assembly.
//!
//! Every environment reports a [`RewardBreakdown`] of unscaled base
//! components each step. A task selects and weights those components
//! through one column of its environment's scale matrix.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::EnvId;

/// One matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Scale {
    Factor(f64),
    /// The component's indicator is multiplied by the breakdown's
    /// passthrough value (DBR "Explore Furthest" pick-up pays the furthest
    /// distance explored, 0-200).
    Passthrough { lo: f64, hi: f64 },
}

impl Scale {
    fn label(&self) -> String {
        match *self {
            Scale::Factor(f) => format_factor(f),
            Scale::Passthrough { lo, hi } => format!("{}-{}", format_factor(lo), format_factor(hi)),
        }
    }
}

fn format_factor(f: f64) -> String {
    if f.fract() == 0.0 {
        format!("{}", f as i64)
    } else {
        format!("{f}")
    }
}

use Scale::Factor as F;

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRow {
    pub component: &'static str,
    pub scales: Vec<Scale>,
}

/// Task x component multiplier table of one environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardScaleMatrix {
    pub env_id: EnvId,
    pub task_names: Vec<&'static str>,
    /// Rows of the base task table, in order.
    pub rows: Vec<ScaleRow>,
    /// Components the environment emits that have no row in the base
    /// table (DBR group-up). Applied after `rows`.
    pub supplementary: Vec<ScaleRow>,
}

fn row(component: &'static str, scales: &[Scale]) -> ScaleRow {
    ScaleRow {
        component,
        scales: scales.to_vec(),
    }
}

impl RewardScaleMatrix {
    pub fn for_env(env_id: EnvId) -> Self {
        match env_id {
            EnvId::Wfc => Self {
                env_id,
                task_names: vec!["Generate Energy", "Avoid Damage"],
                rows: vec![
                    row("Generate Energy", &[F(1.0), F(0.0)]),
                    row("Avoid Damage", &[F(0.0), F(1.0)]),
                ],
                supplementary: vec![],
            },
            EnvId::Wrm => Self {
                env_id,
                task_names: vec!["Distribute Resources", "Keep All", "Distribute All"],
                rows: vec![
                    row("Watch Tower Performance", &[F(1.0), F(10.0), F(1.0)]),
                    row("Neighbourhood Performance", &[F(1.0), F(1.0), F(10.0)]),
                    row("Collective Performance", &[F(1.0), F(1.0), F(1.0)]),
                ],
                supplementary: vec![],
            },
            EnvId::Opc => Self {
                env_id,
                task_names: vec![
                    "Plastic Collection",
                    "Find Highest Polluted Area",
                    "Group Up",
                    "Avoid Plastic",
                ],
                rows: vec![
                    row("Collect Trash", &[F(1.0), F(1.0), F(1.0), F(-1.0)]),
                    row("Global Lowest Trash Collected", &[F(1.0), F(1.0), F(1.0), F(0.0)]),
                    row("Crossed Border", &[F(1.0), F(1.0), F(1.0), F(1.0)]),
                    row("Collided with Other Vessel", &[F(1.0), F(1.0), F(1.0), F(1.0)]),
                    row("Close to Other Vessel", &[F(0.0), F(0.0), F(1.0), F(0.0)]),
                    row("Nearby Trash Count Delta", &[F(0.0), F(1.0), F(0.0), F(0.0)]),
                    row("Collide with Trash", &[F(0.0), F(0.0), F(0.0), F(1.0)]),
                ],
                supplementary: vec![],
            },
            EnvId::Dbr => {
                let z = F(0.0);
                let o = F(1.0);
                Self {
                    env_id,
                    task_names: vec![
                        "Maximize Collective Planted Tree Count",
                        "Find Closest Forest Perimeter",
                        "Pick-up Seed at Base",
                        "Drop Seed",
                        "Find Highest Potential Seed Drop Location",
                        "Find Highest Point on Landscape",
                        "Explore Furthest Distance and Return to Base",
                        "Explore Furthest Distance and Return to Base",
                    ],
                    rows: vec![
                        row("Drop Seed", &[o, z, z, z, o, z, z, z]),
                        row("Deplete Energy Holding Seed", &[o, o, o, o, o, o, o, o]),
                        row("Deplete Energy No Seed", &[o, o, o, o, o, o, o, o]),
                        row(
                            "Pick-up Seed",
                            &[o, z, F(100.0), o, o, z, z, Scale::Passthrough { lo: 0.0, hi: 200.0 }],
                        ),
                        row("Incremental Running Back", &[o, z, z, o, o, z, z, o]),
                        row("High Fertility Location Delta", &[z, z, z, z, z, o, z, z]),
                        row("High Landscape Point Delta", &[z, z, z, z, z, z, o, z]),
                        row("Far Distance Explored Delta", &[z, z, z, z, z, z, z, o]),
                        row("Find Close Tree", &[z, o, z, z, z, z, z, z]),
                    ],
                    supplementary: vec![row("Group-up", &[z, z, o, z, z, z, z, z])],
                }
            }
            EnvId::Aws => {
                let z = F(0.0);
                let o = F(1.0);
                Self {
                    env_id,
                    task_names: vec![
                        "Minimize Time Fire Burning and Protect Village",
                        "Maximize Extinguished Burning Trees",
                        "Maximize Preparing Non-Burning Trees",
                        "Minimize Time Fire Burning",
                        "Protect Village",
                        "Pick Up Water",
                        "Drop Water",
                        "Find Fire",
                        "Find Village",
                    ],
                    rows: vec![
                        row("Crossed Border", &[o, o, o, o, o, o, o, o, o]),
                        row("Pick-up Water", &[o, o, o, o, o, F(100.0), o, z, z]),
                        row("Fire Out", &[o, o, o, o, o, z, z, z, z]),
                        row("Too Close to Village", &[o, o, o, o, F(10.0), z, z, z, z]),
                        row("Time Step Burning", &[z, z, z, o, z, z, z, z, z]),
                        row("Find Fire", &[z, z, z, z, z, z, z, o, z]),
                        row("Find Village", &[z, z, z, z, z, z, z, z, o]),
                        row("Extinguishing Tree", &[o, F(10.0), o, o, o, o, o, z, z]),
                        row("Preparing Tree", &[o, o, F(5.0), o, o, o, o, z, z]),
                    ],
                    supplementary: vec![],
                }
            }
        }
    }

    pub fn task_count(&self) -> usize {
        self.task_names.len()
    }

    /// All component names in breakdown order.
    pub fn component_names(&self) -> Vec<&'static str> {
        self.rows
            .iter()
            .chain(&self.supplementary)
            .map(|r| r.component)
            .collect()
    }

    pub fn component_count(&self) -> usize {
        self.rows.len() + self.supplementary.len()
    }

    pub fn component_index(&self, name: &str) -> Option<usize> {
        self.component_names().iter().position(|c| *c == name)
    }

    /// The task's column, in breakdown order.
    pub fn column(&self, task: usize) -> Result<Vec<Scale>> {
        if task >= self.task_count() {
            return Err(Error::config(
                "task",
                format!("{} has {} tasks, got {task}", self.env_id, self.task_count()),
            ));
        }
        Ok(self
            .rows
            .iter()
            .chain(&self.supplementary)
            .map(|r| r.scales[task])
            .collect())
    }

    /// Aligned text rendering of the base table (and, separately, any
    /// supplementary rows).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let name_w = self
            .rows
            .iter()
            .chain(&self.supplementary)
            .map(|r| r.component.len() + 4)
            .max()
            .unwrap_or(6)
            .max("Reward".len());
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .chain(&self.supplementary)
            .map(|r| r.scales.iter().map(Scale::label).collect())
            .collect();
        let col_w = cells
            .iter()
            .flatten()
            .map(String::len)
            .max()
            .unwrap_or(1)
            .max(3);

        let _ = writeln!(out, "# {} ({}) task reward scales", self.env_id.full_name(), self.env_id);
        let _ = write!(out, "{:<name_w$}", "Reward");
        for t in 0..self.task_count() {
            let _ = write!(out, "  {:>col_w$}", format!("{}.", t + 1));
        }
        out.push('\n');
        let render_rows = |rows: &[ScaleRow], first_number: usize, cells: &[Vec<String>]| {
            let mut s = String::new();
            for (i, (r, c)) in rows.iter().zip(cells).enumerate() {
                let label = format!("{}. {}", first_number + i, r.component);
                let _ = write!(s, "{label:<name_w$}");
                for v in c {
                    let _ = write!(s, "  {v:>col_w$}");
                }
                s.push('\n');
            }
            s
        };
        out.push_str(&render_rows(&self.rows, 1, &cells[..self.rows.len()]));
        if !self.supplementary.is_empty() {
            out.push_str("# supplementary components (not in the base table)\n");
            let n = self.rows.len() + 1;
            out.push_str(&render_rows(&self.supplementary, n, &cells[self.rows.len()..]));
        }
        out.push_str("# tasks:");
        for (t, name) in self.task_names.iter().enumerate() {
            let _ = write!(out, " {}={}", t + 1, name);
            if t + 1 < self.task_count() {
                out.push(';');
            }
        }
        out.push('\n');
        out
    }
}

/// Named base reward components of one agent for one step, before task
/// scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub env_id: EnvId,
    pub values: Vec<f64>,
    /// Value paid through `Scale::Passthrough` entries.
    pub passthrough: f64,
}

impl RewardBreakdown {
    pub fn zeros(env_id: EnvId) -> Self {
        let n = RewardScaleMatrix::for_env(env_id).component_count();
        Self {
            env_id,
            values: vec![0.0; n],
            passthrough: 0.0,
        }
    }

    pub fn from_named(env_id: EnvId, pairs: &[(&str, f64)]) -> Result<Self> {
        let mut bd = Self::zeros(env_id);
        for (name, v) in pairs {
            bd.set(name, *v)?;
        }
        Ok(bd)
    }

    pub fn set(&mut self, name: &str, v: f64) -> Result<()> {
        let idx = RewardScaleMatrix::for_env(self.env_id)
            .component_index(name)
            .ok_or_else(|| Error::config("component", format!("unknown {} reward component `{name}`", self.env_id)))?;
        self.values[idx] = v;
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        RewardScaleMatrix::for_env(self.env_id)
            .component_index(name)
            .map(|i| self.values[i])
    }

    pub fn named(&self) -> Vec<(&'static str, f64)> {
        RewardScaleMatrix::for_env(self.env_id)
            .component_names()
            .into_iter()
            .zip(self.values.iter().copied())
            .collect()
    }
}

/// Dot product of a task column with a breakdown.
pub fn scaled_reward(env_id: EnvId, task: usize, breakdown: &RewardBreakdown) -> Result<f64> {
    let column = RewardScaleMatrix::for_env(env_id).column(task)?;
    apply_column(&column, breakdown)
}

/// Applies a pre-fetched task column.
pub fn apply_column(column: &[Scale], breakdown: &RewardBreakdown) -> Result<f64> {
    if breakdown.values.len() != column.len() {
        return Err(Error::Contract(format!(
            "breakdown has {} components, scale column {}",
            breakdown.values.len(),
            column.len()
        )));
    }
    Ok(column
        .iter()
        .zip(&breakdown.values)
        .map(|(s, v)| match *s {
            Scale::Factor(f) => f * v,
            Scale::Passthrough { lo, hi } => v * breakdown.passthrough.clamp(lo, hi),
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_match_task_tables() {
        let dims: Vec<(usize, usize)> = EnvId::ALL
            .iter()
            .map(|e| {
                let m = RewardScaleMatrix::for_env(*e);
                (m.rows.len(), m.task_count())
            })
            .collect();
        assert_eq!(dims, vec![(2, 2), (3, 3), (7, 4), (9, 8), (9, 9)]);
        for e in EnvId::ALL {
            let m = RewardScaleMatrix::for_env(e);
            assert_eq!(m.task_count(), e.task_count());
            for r in m.rows.iter().chain(&m.supplementary) {
                assert_eq!(r.scales.len(), m.task_count(), "{e} {}", r.component);
            }
        }
    }

    #[test]
    fn aws_maximize_extinguishing_scales_by_ten() {
        let bd = RewardBreakdown::from_named(EnvId::Aws, &[("Extinguishing Tree", 5.0)]).unwrap();
        assert_eq!(scaled_reward(EnvId::Aws, 1, &bd).unwrap(), 50.0);
    }

    #[test]
    fn wfc_avoid_damage_ignores_energy() {
        let bd = RewardBreakdown::from_named(EnvId::Wfc, &[("Generate Energy", 0.7)]).unwrap();
        assert_eq!(scaled_reward(EnvId::Wfc, 1, &bd).unwrap(), 0.0);
        assert_eq!(scaled_reward(EnvId::Wfc, 0, &bd).unwrap(), 0.7);
    }

    #[test]
    fn zero_breakdown_scales_to_zero_everywhere() {
        for e in EnvId::ALL {
            let bd = RewardBreakdown::zeros(e);
            for t in 0..e.task_count() {
                assert_eq!(scaled_reward(e, t, &bd).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn unknown_component_is_config_error() {
        let err = RewardBreakdown::from_named(EnvId::Wfc, &[("Collect Trash", 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn dbr_explore_task_passes_through_distance() {
        let mut bd = RewardBreakdown::from_named(EnvId::Dbr, &[("Pick-up Seed", 1.0)]).unwrap();
        bd.passthrough = 137.5;
        assert_eq!(scaled_reward(EnvId::Dbr, 7, &bd).unwrap(), 137.5);
        assert_eq!(scaled_reward(EnvId::Dbr, 2, &bd).unwrap(), 100.0);
    }

    #[test]
    fn scaled_reward_is_linear() {
        let mut a = RewardBreakdown::zeros(EnvId::Opc);
        let mut b = RewardBreakdown::zeros(EnvId::Opc);
        for (i, v) in a.values.iter_mut().enumerate() {
            *v = i as f64 * 0.5 - 1.0;
        }
        for (i, v) in b.values.iter_mut().enumerate() {
            *v = (i * i) as f64 * 0.25;
        }
        let mut sum = a.clone();
        for (s, v) in sum.values.iter_mut().zip(&b.values) {
            *s = 2.0 * *s + 3.0 * v;
        }
        for t in 0..4 {
            let lhs = scaled_reward(EnvId::Opc, t, &sum).unwrap();
            let rhs = 2.0 * scaled_reward(EnvId::Opc, t, &a).unwrap()
                + 3.0 * scaled_reward(EnvId::Opc, t, &b).unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
