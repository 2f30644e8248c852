//! Trainer hyperparameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value-loss coefficient.
pub const VALUE_COEF: f64 = 0.5;
/// Global gradient-norm clip.
pub const MAX_GRAD_NORM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LrSchedule {
    Linear,
    Constant,
}

impl FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(LrSchedule::Linear),
            "constant" => Ok(LrSchedule::Constant),
            _ => Err(Error::config("learning_rate_schedule", format!("expected linear or constant, got `{s}`"))),
        }
    }
}

impl fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrSchedule::Linear => "linear",
            LrSchedule::Constant => "constant",
        })
    }
}

/// Visual encoder architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VisEncodeType {
    /// Two strided convolutions (8×8/4, 4×4/2) and a dense layer.
    Simple,
    /// Two stages of 3×3 convolution, 2×2 max-pool and a residual block.
    Resnet,
}

impl FromStr for VisEncodeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(VisEncodeType::Simple),
            "resnet" => Ok(VisEncodeType::Resnet),
            _ => Err(Error::config("vis_encode_type", format!("expected simple or resnet, got `{s}`"))),
        }
    }
}

impl fmt::Display for VisEncodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VisEncodeType::Simple => "simple",
            VisEncodeType::Resnet => "resnet",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuriosityConfig {
    pub gamma: f64,
    pub strength: f64,
    pub encoding_size: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub batch_size: usize,
    pub buffer_size: usize,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    pub beta: f64,
    pub epsilon: f64,
    pub lambd: f64,
    pub num_epoch: usize,
    pub normalize: bool,
    pub hidden_units: usize,
    pub num_layers: usize,
    pub vis_encode_type: VisEncodeType,
    pub gamma: f64,
    pub extrinsic_strength: f64,
    pub curiosity: Option<CuriosityConfig>,
    pub max_steps: u64,
    pub time_horizon: usize,
    pub summary_freq: u64,
    pub keep_checkpoints: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            buffer_size: 2048,
            learning_rate: 3e-4,
            lr_schedule: LrSchedule::Linear,
            beta: 0.005,
            epsilon: 0.2,
            lambd: 0.95,
            num_epoch: 3,
            normalize: false,
            hidden_units: 64,
            num_layers: 2,
            vis_encode_type: VisEncodeType::Simple,
            gamma: 0.9,
            extrinsic_strength: 1.0,
            curiosity: None,
            max_steps: 8_000_000,
            time_horizon: 2048,
            summary_freq: 40_000,
            keep_checkpoints: 5,
        }
    }
}

fn outside(v: f64, lo: f64, hi: f64) -> bool {
    v < lo || v > hi
}

impl TrainerConfig {
    /// Learning rate after `step` agent steps.
    pub fn lr_at(&self, step: u64) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Linear => {
                let frac = 1.0 - step as f64 / self.max_steps.max(1) as f64;
                self.learning_rate * frac.max(0.0)
            }
        }
    }

    /// Rejects values the trainer cannot run with.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("buffer_size", self.buffer_size),
            ("num_epoch", self.num_epoch),
            ("hidden_units", self.hidden_units),
            ("num_layers", self.num_layers),
            ("time_horizon", self.time_horizon),
        ];
        for (field, v) in positive {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        let finite = [
            ("learning_rate", self.learning_rate),
            ("beta", self.beta),
            ("epsilon", self.epsilon),
            ("lambd", self.lambd),
            ("gamma", self.gamma),
            ("strength", self.extrinsic_strength),
        ];
        for (field, v) in finite {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(field, format!("must be finite and non-negative, got {v}")));
            }
        }
        if self.gamma > 1.0 || self.lambd > 1.0 {
            return Err(Error::config("gamma", "discount and lambda must not exceed 1"));
        }
        if self.summary_freq == 0 {
            return Err(Error::config("summary_freq", "must be positive"));
        }
        if let Some(c) = &self.curiosity {
            if c.encoding_size == 0 || !c.strength.is_finite() || !c.learning_rate.is_finite() {
                return Err(Error::config("curiosity", "needs a positive encoding size and finite rates"));
            }
        }
        Ok(())
    }

    /// Values outside the typical hyperparameter ranges. Batch-size bounds
    /// depend on whether the action space has continuous axes.
    pub fn range_warnings(&self, continuous: bool) -> Vec<String> {
        let mut w = Vec::new();
        let mut check = |name: &str, v: f64, lo: f64, hi: f64| {
            if outside(v, lo, hi) {
                w.push(format!("{name} = {v} is outside the typical range {lo}-{hi}"));
            }
        };
        check("gamma", self.gamma, 0.8, 0.995);
        check("lambd", self.lambd, 0.9, 0.95);
        check("buffer_size", self.buffer_size as f64, 2048.0, 409600.0);
        if continuous {
            check("batch_size", self.batch_size as f64, 512.0, 5120.0);
        } else {
            check("batch_size", self.batch_size as f64, 32.0, 512.0);
        }
        check("num_epoch", self.num_epoch as f64, 3.0, 10.0);
        if self.learning_rate != 0.0 {
            check("learning_rate", self.learning_rate, 1e-5, 1e-3);
        }
        check("time_horizon", self.time_horizon as f64, 32.0, 2048.0);
        check("max_steps", self.max_steps as f64, 5e5, 1e7);
        check("beta", self.beta, 1e-4, 1e-2);
        check("epsilon", self.epsilon, 0.1, 0.3);
        check("num_layers", self.num_layers as f64, 1.0, 3.0);
        check("hidden_units", self.hidden_units as f64, 32.0, 512.0);
        if let Some(c) = &self.curiosity {
            check("curiosity encoding_size", c.encoding_size as f64, 64.0, 256.0);
            check("curiosity strength", c.strength, 0.001, 0.1);
        }
        w
    }
}
