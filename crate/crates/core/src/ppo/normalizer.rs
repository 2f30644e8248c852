//! Running mean/variance normalization of vector observations.

use serde::{Deserialize, Serialize};

pub const NORM_CLIP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    m2: Vec<f64>,
}

impl RunningNorm {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn update(&mut self, x: &[f32]) {
        self.update_with(|i| x[i] as f64);
    }

    pub fn update_f64(&mut self, x: &[f64]) {
        self.update_with(|i| x[i]);
    }

    fn update_with(&mut self, x: impl Fn(usize) -> f64) {
        self.count += 1.0;
        for i in 0..self.mean.len() {
            let v = x(i);
            let d = v - self.mean[i];
            self.mean[i] += d / self.count;
            self.m2[i] += d * (v - self.mean[i]);
        }
    }

    pub fn variance(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            1.0
        } else {
            self.m2[i] / self.count
        }
    }

    pub fn apply(&self, x: &[f32], out: &mut Vec<f32>) {
        out.extend(x.iter().enumerate().map(|(i, &v)| {
            let z = (v as f64 - self.mean[i]) / (self.variance(i) + 1e-8).sqrt();
            z.clamp(-NORM_CLIP, NORM_CLIP) as f32
        }));
    }
}
