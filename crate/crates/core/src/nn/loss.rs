//! Losses: softmax cross-entropy, Huber, and the weighted batch reduction.

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Floor for logarithm arguments.
const LOG_FLOOR: f64 = 1e-12;

/// Per-sample softmax cross-entropy, stabilized by max-subtraction.
pub fn softmax_cross_entropy<S: Scalar>(logits: &[S], target: usize) -> Result<S> {
    if target >= logits.len() {
        return Err(Error::TargetOutOfRange {
            target,
            classes: logits.len(),
        });
    }
    let m = logits.iter().cloned().fold(S::neg_infinity(), S::max);
    let sum: S = logits.iter().map(|&l| (l - m).exp()).sum();
    Ok(sum.max(S::from_f(LOG_FLOOR)).ln() - (logits[target] - m))
}

/// Gradient of the per-sample cross-entropy with respect to the logits:
/// softmax(logits) - onehot(target).
pub fn softmax_cross_entropy_grad<S: Scalar>(logits: &[S], target: usize) -> Result<Vec<S>> {
    if target >= logits.len() {
        return Err(Error::TargetOutOfRange {
            target,
            classes: logits.len(),
        });
    }
    let m = logits.iter().cloned().fold(S::neg_infinity(), S::max);
    let exps: Vec<S> = logits.iter().map(|&l| (l - m).exp()).collect();
    let sum: S = exps.iter().cloned().sum();
    let mut grad: Vec<S> = exps.into_iter().map(|e| e / sum).collect();
    grad[target] = grad[target] - S::one();
    Ok(grad)
}

/// Per-sample losses and per-sample logit gradients for a batch of logits.
/// The gradient rows are unscaled; callers apply their per-sample weights and
/// the 1/B batch factor.
pub fn softmax_ce_batch<S: Scalar>(
    logits: &Tensor<S>,
    targets: &[usize],
) -> Result<(Vec<S>, Tensor<S>)> {
    if logits.rows() != targets.len() {
        return Err(Error::LengthMismatch {
            what: "logit rows vs targets",
            left: logits.rows(),
            right: targets.len(),
        });
    }
    let mut losses = Vec::with_capacity(targets.len());
    let mut grads = Tensor::zeros(vec![logits.rows(), logits.row_len()]);
    for (i, &t) in targets.iter().enumerate() {
        losses.push(softmax_cross_entropy(logits.row(i), t)?);
        let g = softmax_cross_entropy_grad(logits.row(i), t)?;
        grads.row_mut(i).copy_from_slice(&g);
    }
    Ok((losses, grads))
}

/// Huber loss: quadratic inside |pred - target| <= delta, linear outside.
pub fn huber_loss<S: Scalar>(pred: S, target: S, delta: S) -> Result<S> {
    if delta <= S::zero() {
        return Err(Error::invalid(format!("huber delta must be > 0, got {delta}")));
    }
    let d = (pred - target).abs();
    let half = S::from_f(0.5);
    Ok(if d <= delta {
        half * d * d
    } else {
        delta * (d - half * delta)
    })
}

/// d huber / d pred: the difference clipped to [-delta, delta].
pub fn huber_grad<S: Scalar>(pred: S, target: S, delta: S) -> S {
    (pred - target).max(-delta).min(delta)
}

/// Weighted batch reduction (1/B) * sum(w_i * loss_i). Weights are constants:
/// no gradient flows into them through this reduction.
pub fn weighted_mean_loss<S: Scalar>(losses: &[S], weights: &[S]) -> Result<S> {
    if losses.len() != weights.len() {
        return Err(Error::LengthMismatch {
            what: "losses vs weights",
            left: losses.len(),
            right: weights.len(),
        });
    }
    if losses.is_empty() {
        return Err(Error::invalid("weighted_mean_loss on empty batch"));
    }
    let b = S::from_us(losses.len());
    let sum: S = losses.iter().zip(weights).map(|(&l, &w)| w * l).sum();
    Ok(sum / b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_softmax_loss_is_ln2() {
        let l = softmax_cross_entropy(&[0.0f64, 0.0], 0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn dominant_logit_no_overflow() {
        let l = softmax_cross_entropy(&[1000.0f64, 0.0], 0).unwrap();
        assert!(l.is_finite() && l.abs() < 1e-12, "loss {l}");
    }

    #[test]
    fn direct_evaluation_oracle() {
        // -3 + ln(e^1 + e^2 + e^3), cross-checked by 40-digit evaluation.
        let l = softmax_cross_entropy(&[1.0f64, 2.0, 3.0], 2).unwrap();
        assert!((l - 0.40760596444438030).abs() < 1e-15, "loss {l}");
    }

    #[test]
    fn target_out_of_range() {
        assert!(softmax_cross_entropy(&[0.0f64, 0.0], 2).is_err());
    }

    #[test]
    fn grad_sums_to_zero_and_matches_softmax() {
        let g = softmax_cross_entropy_grad(&[1.0f64, 2.0, 3.0], 2).unwrap();
        let total: f64 = g.iter().sum();
        assert!(total.abs() < 1e-15);
        assert!(g[0] > 0.0 && g[1] > 0.0 && g[2] < 0.0);
    }

    #[test]
    fn huber_values() {
        assert_eq!(huber_loss(3.0f64, 3.0, 1.0).unwrap(), 0.0);
        assert_eq!(huber_loss(1.0f64, 0.0, 1.0).unwrap(), 0.5);
        assert_eq!(huber_loss(3.0f64, 0.0, 1.0).unwrap(), 2.5);
        assert!(huber_loss(1.0f64, 0.0, 0.0).is_err());
    }

    #[test]
    fn huber_continuous_at_seam() {
        let delta = 1.0f64;
        let eps = 1e-9;
        let inside = huber_loss(delta - eps, 0.0, delta).unwrap();
        let outside = huber_loss(delta + eps, 0.0, delta).unwrap();
        assert!((inside - outside).abs() < 1e-8);
        assert!((huber_grad(delta - eps, 0.0, delta) - huber_grad(delta + eps, 0.0, delta)).abs() < 1e-8);
    }

    #[test]
    fn weighted_mean_examples() {
        assert_eq!(weighted_mean_loss(&[2.0f64, 4.0], &[1.0, 1.0]).unwrap(), 3.0);
        assert_eq!(weighted_mean_loss(&[2.0f64, 4.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(weighted_mean_loss(&[2.0f64, 4.0], &[0.5, 0.25]).unwrap(), 1.0);
        assert!(weighted_mean_loss(&[1.0f64], &[1.0, 1.0]).is_err());
    }
}
