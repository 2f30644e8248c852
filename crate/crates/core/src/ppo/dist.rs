//! Action distributions: one categorical per discrete branch and a diagonal
//! Gaussian with state-independent, bounded log-std for continuous axes.

use super::nn::Real;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 1.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

pub fn log_softmax<R: Real>(logits: &[R]) -> Vec<R> {
    let max = logits.iter().copied().fold(R::neg_infinity(), R::max);
    let lse = logits.iter().map(|&z| (z - max).exp()).sum::<R>().ln() + max;
    logits.iter().map(|&z| z - lse).collect()
}

pub fn softmax<R: Real>(logits: &[R]) -> Vec<R> {
    log_softmax(logits).into_iter().map(|l| l.exp()).collect()
}

pub fn categorical_entropy<R: Real>(logits: &[R]) -> R {
    log_softmax(logits).into_iter().map(|l| -l.exp() * l).sum()
}

/// Inverse-CDF draw with `u` uniform on [0, 1).
pub fn sample_categorical<R: Real>(probs: &[R], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p.as_f64();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn clamp_log_std<R: Real>(v: R) -> R {
    v.max(R::of(LOG_STD_MIN)).min(R::of(LOG_STD_MAX))
}

pub fn gaussian_log_prob<R: Real>(a: R, mean: R, log_std: R) -> R {
    let z = (a - mean) / log_std.exp();
    R::of(-0.5) * z * z - log_std - R::of(HALF_LN_2PI)
}

pub fn gaussian_entropy<R: Real>(log_std: R) -> R {
    log_std + R::of(0.5 + HALF_LN_2PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probabilities_sum_to_one() {
        let p = softmax(&[0.3f64, -2.0, 5.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let p = softmax(&[800.0f32, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn entropy_is_maximal_for_uniform_logits() {
        let uniform = categorical_entropy(&[0.0f64; 3]);
        assert!((uniform - 3f64.ln()).abs() < 1e-12);
        assert!(categorical_entropy(&[1.0f64, 0.0, -1.0]) < uniform);
        assert!(categorical_entropy(&[50.0f64, 0.0, 0.0]) >= 0.0);
    }

    #[test]
    fn sampling_follows_cdf() {
        let p = [0.2f64, 0.5, 0.3];
        assert_eq!(sample_categorical(&p, 0.1), 0);
        assert_eq!(sample_categorical(&p, 0.2), 1);
        assert_eq!(sample_categorical(&p, 0.69), 1);
        assert_eq!(sample_categorical(&p, 0.999), 2);
    }

    #[test]
    fn gaussian_density_at_mean() {
        let lp = gaussian_log_prob(0.0f64, 0.0, 0.0);
        assert!((lp + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        assert_eq!(clamp_log_std(9.0f64), LOG_STD_MAX);
    }
}
