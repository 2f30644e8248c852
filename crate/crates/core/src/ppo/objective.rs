//! The clipped surrogate objective.

/// `min(r·A, clip(r, 1−ε, 1+ε)·A)`.
pub fn ppo_clip_objective(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    (ratio * advantage).min(clipped * advantage)
}

/// Derivative of [`ppo_clip_objective`] with respect to the ratio. Zero
/// wherever the clipped branch is the active minimum.
pub fn ppo_clip_grad(ratio: f64, advantage: f64, epsilon: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - epsilon, 1.0 + epsilon);
    if ratio * advantage <= clipped * advantage {
        advantage
    } else {
        0.0
    }
}

/// Whether the sample lies outside the trust region on the side that
/// zeroes its gradient.
pub fn is_clipped(ratio: f64, advantage: f64, epsilon: f64) -> bool {
    ppo_clip_grad(ratio, advantage, epsilon) == 0.0 && advantage != 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(ppo_clip_objective(1.0, 1.0, 0.2), 1.0);
        assert!((ppo_clip_objective(2.0, 1.0, 0.2) - 1.2).abs() < 1e-12);
        assert!((ppo_clip_objective(0.5, -1.0, 0.2) + 0.8).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_on_clipped_side() {
        assert_eq!(ppo_clip_grad(2.0, 1.0, 0.2), 0.0);
        assert_eq!(ppo_clip_grad(0.5, 1.0, 0.2), 1.0);
        assert_eq!(ppo_clip_grad(0.5, -1.0, 0.2), 0.0);
        assert_eq!(ppo_clip_grad(2.0, -1.0, 0.2), -1.0);
        assert!(is_clipped(2.0, 1.0, 0.2));
    }
}
