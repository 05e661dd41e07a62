//! Per-sample weight regression and the block-coordinate joint training step.
//!
//! The screener network maps each training sample to a significance weight in
//! (0, 1) via a final sigmoid. Its objective, per batch of samples with
//! detached main-network errors e and predicted weights w, is
//!
//! ```text
//! L = sum_x [ (1 - w_x)^2 * e_x  +  w_x^2 * max(M - e_x, 0) ]  +  alpha * sum_p |p|
//! ```
//!
//! a non-negative saddle with minima at (w, e) = (0, 0) and (1, 1) and maxima
//! at (0, 1) and (1, 0): high-error samples get their weight pushed up,
//! low-error samples down. The joint step alternates: update the main network
//! under the (constant) weights, then update the screener under the
//! (constant) errors.

use crate::error::{Error, Result};
use crate::nn::{softmax_ce_batch, weighted_mean_loss, Network, Optimizer, Tensor};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct ScreenerConfig<S: Scalar> {
    /// Margin M of the hinge term; errors above it always pull weights up.
    pub margin: S,
    /// L1 regularization strength on the screener parameters.
    pub l1_alpha: S,
    /// Momentum blend for weight updates; 0 disables (the default).
    pub blend_lambda: S,
    /// Errors fed to the screener objective are clipped to [0, e_cap] so the
    /// hinge stays meaningful against an unbounded loss.
    pub e_cap: S,
    /// Diagnostic hook: when set, predicted weights are replaced by this
    /// constant and the screener is not trained.
    pub pin_weight: Option<S>,
}

impl<S: Scalar> Default for ScreenerConfig<S> {
    fn default() -> Self {
        ScreenerConfig {
            margin: S::one(),
            l1_alpha: S::from_f(1e-4),
            blend_lambda: S::zero(),
            e_cap: S::from_f(5.0),
            pin_weight: None,
        }
    }
}

impl<S: Scalar> ScreenerConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.margin <= S::zero() {
            return Err(Error::invalid(format!("margin must be > 0, got {}", self.margin)));
        }
        if self.l1_alpha < S::zero() {
            return Err(Error::invalid(format!(
                "l1_alpha must be >= 0, got {}",
                self.l1_alpha
            )));
        }
        if self.blend_lambda < S::zero() || self.blend_lambda > S::one() {
            return Err(Error::invalid(format!(
                "blend_lambda must be in [0, 1], got {}",
                self.blend_lambda
            )));
        }
        if self.e_cap <= S::zero() {
            return Err(Error::invalid(format!("e_cap must be > 0, got {}", self.e_cap)));
        }
        Ok(())
    }
}

/// One batch with everything the joint step produced for it.
#[derive(Clone, Debug)]
pub struct WeightedBatch<S: Scalar> {
    pub inputs: Tensor<S>,
    pub targets: Vec<usize>,
    pub weights: Vec<S>,
    pub raw_errors: Vec<S>,
}

impl<S: Scalar> WeightedBatch<S> {
    pub fn validate(&self) -> Result<()> {
        let n = self.inputs.rows();
        for (what, len) in [
            ("targets", self.targets.len()),
            ("weights", self.weights.len()),
            ("raw_errors", self.raw_errors.len()),
        ] {
            if len != n {
                return Err(Error::LengthMismatch {
                    what,
                    left: n,
                    right: len,
                });
            }
        }
        if self.weights.iter().any(|&w| w <= S::zero() || w >= S::one()) {
            return Err(Error::invalid("weights must lie strictly in (0, 1)"));
        }
        if self.raw_errors.iter().any(|&e| e < S::zero()) {
            return Err(Error::invalid("raw errors must be non-negative"));
        }
        Ok(())
    }
}

/// Per-step report appended to the experiment metrics.
#[derive(Clone, Copy, Debug)]
pub struct StepReport<S: Scalar> {
    pub weighted_loss: S,
    pub screener_loss: S,
    pub mean_weight: S,
}

/// Predict one weight per batch row. The screener's final activation must be
/// a sigmoid, so every weight is strictly inside (0, 1).
pub fn predict_weights<S: Scalar>(
    screener: &mut Network<S>,
    batch_inputs: &Tensor<S>,
    cfg: &ScreenerConfig<S>,
) -> Result<Vec<S>> {
    if let Some(pin) = cfg.pin_weight {
        return Ok(vec![pin; batch_inputs.rows()]);
    }
    let out = screener.forward(batch_inputs)?;
    if out.row_len() != 1 {
        return Err(Error::invalid(format!(
            "screener must emit one weight per sample, emits {}",
            out.row_len()
        )));
    }
    Ok(out.data().to_vec())
}

/// The screener objective value for one batch (errors already detached).
pub fn screener_loss<S: Scalar>(
    weights: &[S],
    errors: &[S],
    cfg: &ScreenerConfig<S>,
    screener: &Network<S>,
) -> Result<S> {
    if weights.len() != errors.len() {
        return Err(Error::LengthMismatch {
            what: "weights vs errors",
            left: weights.len(),
            right: errors.len(),
        });
    }
    if errors.iter().any(|&e| e < S::zero()) {
        return Err(Error::invalid("screener errors must be non-negative"));
    }
    let one = S::one();
    let mut total = S::zero();
    for (&w, &e) in weights.iter().zip(errors) {
        let miss = one - w;
        total = total + miss * miss * e + w * w * (cfg.margin - e).max(S::zero());
    }
    Ok(total + cfg.l1_alpha * screener.l1_norm())
}

/// dL/dw per sample: -2 (1 - w) e + 2 w max(M - e, 0). Negative whenever the
/// error term dominates, pushing the weight toward 1.
pub fn screener_weight_grad<S: Scalar>(w: S, e: S, cfg: &ScreenerConfig<S>) -> S {
    let two = S::from_f(2.0);
    let one = S::one();
    -two * (one - w) * e + two * w * (cfg.margin - e).max(S::zero())
}

/// Clip raw errors into [0, e_cap] for the screener objective.
pub fn clip_errors<S: Scalar>(raw: &[S], cfg: &ScreenerConfig<S>) -> Vec<S> {
    raw.iter().map(|&e| e.min(cfg.e_cap).max(S::zero())).collect()
}

/// One screener update on detached errors: forward, backpropagate dL/dw,
/// add the L1 subgradient, and step. Returns the objective value before the
/// update. No-op (returning the loss under pinned weights) when a pin is set.
pub fn train_screener_on_errors<S: Scalar>(
    screener: &mut Network<S>,
    opt: &mut Optimizer<S>,
    inputs: &Tensor<S>,
    raw_errors: &[S],
    cfg: &ScreenerConfig<S>,
) -> Result<S> {
    let errors = clip_errors(raw_errors, cfg);
    if cfg.pin_weight.is_some() {
        let weights = predict_weights(screener, inputs, cfg)?;
        return screener_loss(&weights, &errors, cfg, screener);
    }
    let out = screener.forward(inputs)?;
    let weights = out.data().to_vec();
    if weights.len() != errors.len() {
        return Err(Error::LengthMismatch {
            what: "screener outputs vs errors",
            left: weights.len(),
            right: errors.len(),
        });
    }
    let loss = screener_loss(&weights, &errors, cfg, screener)?;
    let mut upstream = Tensor::zeros(vec![inputs.rows(), 1]);
    for (u, (&w, &e)) in upstream.data_mut().iter_mut().zip(weights.iter().zip(&errors)) {
        *u = screener_weight_grad(w, e, cfg);
    }
    screener.backward(&upstream)?;
    if cfg.l1_alpha > S::zero() {
        for p in screener.parameters_mut() {
            let data: Vec<S> = p.data().to_vec();
            for (g, v) in p.grad_mut().iter_mut().zip(data) {
                // Subgradient 0 at v = 0.
                if v > S::zero() {
                    *g = *g + cfg.l1_alpha;
                } else if v < S::zero() {
                    *g = *g - cfg.l1_alpha;
                }
            }
        }
    }
    opt.step(screener)?;
    Ok(loss)
}

/// Classification main-network update under constant per-sample factors:
/// forward, per-sample cross-entropy, weighted reduction, backward, step.
/// Returns the raw (unweighted) per-sample losses and the applied weighted
/// loss. Every training mode funnels through this one routine, so the mode
/// degeneracies (factors identically 1) reduce to the baseline bit-exactly.
pub fn apply_weighted_update<S: Scalar>(
    main: &mut Network<S>,
    main_opt: &mut Optimizer<S>,
    inputs: &Tensor<S>,
    targets: &[usize],
    factors: &[S],
) -> Result<(Vec<S>, S)> {
    let logits = main.forward(inputs)?;
    let (losses, mut dlogits) = softmax_ce_batch(&logits, targets)?;
    let weighted = weighted_mean_loss(&losses, factors)?;
    let batch = S::from_us(losses.len());
    for (i, &w) in factors.iter().enumerate() {
        let scale = w / batch;
        for g in dlogits.row_mut(i) {
            *g = *g * scale;
        }
    }
    main.backward(&dlogits)?;
    main_opt.step(main)?;
    Ok((losses, weighted))
}

/// Block-coordinate joint step for classification batches:
/// 1. predict weights, 2. predict logits, 3. weighted error, 4. per-sample
/// errors, 5. update the main network under constant weights, 6. update the
/// screener under constant errors.
pub fn joint_train_step<S: Scalar>(
    main: &mut Network<S>,
    main_opt: &mut Optimizer<S>,
    screener: &mut Network<S>,
    screener_opt: &mut Optimizer<S>,
    inputs: &Tensor<S>,
    targets: &[usize],
    cfg: &ScreenerConfig<S>,
) -> Result<StepReport<S>> {
    joint_train_step_full(main, main_opt, screener, screener_opt, inputs, targets, cfg)
        .map(|(report, _)| report)
}

/// Like [`joint_train_step`] but also hands back the weighted batch record
/// (weights and detached errors), which harnesses use for priorities and
/// weight tracking.
pub fn joint_train_step_full<S: Scalar>(
    main: &mut Network<S>,
    main_opt: &mut Optimizer<S>,
    screener: &mut Network<S>,
    screener_opt: &mut Optimizer<S>,
    inputs: &Tensor<S>,
    targets: &[usize],
    cfg: &ScreenerConfig<S>,
) -> Result<(StepReport<S>, WeightedBatch<S>)> {
    let weights = predict_weights(screener, inputs, cfg)?;
    let (losses, weighted) = apply_weighted_update(main, main_opt, inputs, targets, &weights)?;
    let screener_loss = train_screener_on_errors(screener, screener_opt, inputs, &losses, cfg)?;
    let mean_weight = weights.iter().cloned().sum::<S>() / S::from_us(weights.len());
    let batch = WeightedBatch {
        inputs: inputs.clone(),
        targets: targets.to_vec(),
        weights,
        raw_errors: losses,
    };
    if cfg.pin_weight.is_none() {
        batch.validate()?;
    }
    Ok((
        StepReport {
            weighted_loss: weighted,
            screener_loss,
            mean_weight,
        },
        batch,
    ))
}

/// Momentum blend of two weight snapshots: lambda * old + (1 - lambda) * new.
pub fn blend_weights<S: Scalar>(old_w: &[S], new_w: &[S], lambda: S) -> Result<Vec<S>> {
    if lambda < S::zero() || lambda > S::one() {
        return Err(Error::invalid(format!("lambda must be in [0, 1], got {lambda}")));
    }
    if old_w.len() != new_w.len() {
        return Err(Error::LengthMismatch {
            what: "old vs new weights",
            left: old_w.len(),
            right: new_w.len(),
        });
    }
    Ok(old_w
        .iter()
        .zip(new_w)
        .map(|(&o, &n)| lambda * o + (S::one() - lambda) * n)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Layer;
    use crate::seed::rng_for;

    fn cfg(margin: f64, l1: f64) -> ScreenerConfig<f64> {
        ScreenerConfig {
            margin,
            l1_alpha: l1,
            ..ScreenerConfig::default()
        }
    }

    /// Screener whose parameters have a 3.0 L1 norm and a sigmoid output.
    fn tiny_screener() -> Network<f64> {
        let weight = Tensor::matrix(1, 1, vec![-3.0]).unwrap();
        Network::new(vec![
            Layer::linear_from(weight, Tensor::zeros(vec![1])).unwrap(),
            Layer::Sigmoid,
        ])
        .unwrap()
    }

    #[test]
    fn eq3_minima_and_maxima() {
        let c = cfg(1.0, 0.0);
        let net = tiny_screener();
        // minima: per-sample value 0 at (0,0) and (1,1)
        assert_eq!(screener_loss(&[0.0], &[0.0], &c, &net).unwrap(), 0.0);
        assert_eq!(screener_loss(&[1.0], &[1.0], &c, &net).unwrap(), 0.0);
        // maxima: per-sample value 1 at (0,1) and (1,0)
        assert_eq!(screener_loss(&[0.0], &[1.0], &c, &net).unwrap(), 1.0);
        assert_eq!(screener_loss(&[1.0], &[0.0], &c, &net).unwrap(), 1.0);
    }

    #[test]
    fn eq3_direct_evaluation() {
        let c = cfg(1.0, 0.0);
        let net = tiny_screener();
        // (0.5)^2 * 0.25 + (0.5)^2 * 0.75 = 0.25
        let l = screener_loss(&[0.5], &[0.25], &c, &net).unwrap();
        assert!((l - 0.25).abs() < 1e-15);
    }

    #[test]
    fn eq3_l1_term() {
        let c = cfg(1.0, 0.1);
        let net = tiny_screener(); // |p| sums to 3
        let l = screener_loss(&[0.5], &[1.0], &c, &net).unwrap();
        assert!((l - 0.55).abs() < 1e-15, "loss {l}");
        // doubling alpha exactly doubles the regularizer contribution
        let c2 = cfg(1.0, 0.2);
        let l2 = screener_loss(&[0.5], &[1.0], &c2, &net).unwrap();
        assert_eq!(l2 - 0.25, 2.0 * (l - 0.25));
    }

    #[test]
    fn negative_error_rejected() {
        let c = cfg(1.0, 0.0);
        let net = tiny_screener();
        assert!(screener_loss(&[0.5], &[-0.1], &c, &net).is_err());
    }

    #[test]
    fn weight_grad_signs() {
        let c = cfg(1.0, 0.0);
        // at e = M the gradient is -2 (1 - w) M < 0 for all w in (0, 1)
        for &w in &[0.1, 0.5, 0.9] {
            let g = screener_weight_grad(w, 1.0, &c);
            assert!((g - (-2.0 * (1.0 - w))).abs() < 1e-15);
            assert!(g < 0.0);
        }
        // high error pushes up (negative gradient), low error pushes down
        assert!(screener_weight_grad(0.5, 0.9, &c) < 0.0);
        assert!(screener_weight_grad(0.5, 0.05, &c) > 0.0);
        // exact regime boundary: (1 - w) e vs w max(M - e, 0)
        let (w, e) = (0.25, 0.2);
        let lhs = (1.0 - w) * e;
        let rhs = w * (1.0 - e);
        assert!(lhs < rhs);
        assert!(screener_weight_grad(w, e, &c) > 0.0);
    }

    #[test]
    fn predict_weights_bounds_and_determinism() {
        let mut rng = rng_for(3, "screener-init");
        let mut s = Network::<f64>::mlp(&[4, 8, 1], true, &mut rng);
        let c = ScreenerConfig::default();
        let x = Tensor::matrix(2, 4, vec![0.3, -1.0, 2.0, 0.1, 0.3, -1.0, 2.0, 0.1]).unwrap();
        let w = predict_weights(&mut s, &x, &c).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.iter().all(|&v| v > 0.0 && v < 1.0));
        // identical inputs give identical weights
        assert_eq!(w[0], w[1]);
    }

    #[test]
    fn zeroed_final_layer_gives_half_weights() {
        let mut rng = rng_for(3, "screener-init");
        let mut s = Network::<f64>::mlp(&[4, 8, 1], true, &mut rng);
        // zero the final linear layer
        let n_layers = s.layers().len();
        if let Layer::Linear { weight, bias } = &mut s.layers_mut()[n_layers - 2] {
            weight.data_mut().iter_mut().for_each(|v| *v = 0.0);
            bias.data_mut().iter_mut().for_each(|v| *v = 0.0);
        }
        let c = ScreenerConfig::default();
        let x = Tensor::matrix(1, 4, vec![0.2, -0.4, 1.0, 0.0]).unwrap();
        let w = predict_weights(&mut s, &x, &c).unwrap();
        assert_eq!(w, vec![0.5]);
    }

    #[test]
    fn blend_weights_examples() {
        assert_eq!(blend_weights(&[0.2], &[0.6], 0.0).unwrap(), vec![0.6]);
        assert_eq!(blend_weights(&[0.2], &[0.6], 1.0).unwrap(), vec![0.2]);
        assert_eq!(blend_weights(&[0.2], &[0.6], 0.5).unwrap(), vec![0.4]);
        assert!(blend_weights(&[0.2], &[0.6], 1.5).is_err());
        assert!(blend_weights(&[0.2], &[0.6, 0.1], 0.5).is_err());
    }

    #[test]
    fn persistent_high_error_sample_outweighs_low_error_sample() {
        // Frozen errors: A stays above the margin, B near zero. 500 screener
        // updates must order the weights w(A) > w(B).
        let mut rng = rng_for(11, "screener-init");
        let mut s = Network::<f64>::mlp(&[2, 8, 1], true, &mut rng);
        let mut opt = Optimizer::adam(1e-2);
        let c = ScreenerConfig::default();
        let inputs = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let errors = [2.0, 0.01];
        for _ in 0..500 {
            train_screener_on_errors(&mut s, &mut opt, &inputs, &errors, &c).unwrap();
        }
        let w = predict_weights(&mut s, &inputs, &c).unwrap();
        assert!(w[0] > w[1], "w = {w:?}");
        assert!(w[0] > 0.9, "high-error weight should approach 1, got {}", w[0]);
    }
}
