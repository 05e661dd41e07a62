//! Supervised classification harness with four training modes.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::mode::Mode;
use crate::nn::{softmax_cross_entropy, Network, Optimizer};
use crate::replay::{priority_from_error, PrioritizedBuffer, ReplayConfig};
use crate::scalar::Scalar;
use crate::screener::{
    apply_weighted_update, predict_weights, train_screener_on_errors, ScreenerConfig,
};
use crate::seed::rng_for;
use crate::supervised::analysis::{
    confusion_failures, extreme_samples, predict_classes, ConfusionMatrix, ExtremeSamples,
    WeightTrace, WeightTracker,
};
use crate::supervised::dataset::Dataset;

#[derive(Clone, Debug)]
pub struct SupervisedConfig<S: Scalar> {
    pub mode: Mode,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: S,
    /// Hidden widths of the main classifier.
    pub main_hidden: Vec<usize>,
    /// Hidden widths of the screener (kept slightly simpler than the main).
    pub screener_hidden: Vec<usize>,
    pub screener: ScreenerConfig<S>,
    pub replay: ReplayConfig<S>,
    /// Number of samples whose weights are traced at every epoch boundary.
    pub track_count: usize,
    /// How many highest/lowest-weight samples to export at the end.
    pub export_k: usize,
}

impl<S: Scalar> Default for SupervisedConfig<S> {
    fn default() -> Self {
        SupervisedConfig {
            mode: Mode::Baseline,
            seed: 0,
            epochs: 5,
            batch_size: 32,
            learning_rate: S::from_f(1e-3),
            main_hidden: vec![256, 128],
            screener_hidden: vec![128],
            screener: ScreenerConfig::default(),
            replay: ReplayConfig::default(),
            track_count: 32,
            export_k: 8,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EpochRow<S: Scalar> {
    pub epoch: u64,
    pub test_accuracy: S,
    /// Mean applied (weighted) batch loss across the epoch.
    pub train_loss_mean: S,
    /// Mean predicted weight across the epoch's batches; None without a
    /// screener.
    pub mean_screener_weight: Option<S>,
}

#[derive(Debug)]
pub struct SupervisedOutput<S: Scalar> {
    pub rows: Vec<EpochRow<S>>,
    pub traces: Vec<WeightTrace<S>>,
    /// Final screener weight per training sample (screener modes).
    pub final_weights: Option<Vec<S>>,
    /// Final unweighted per-sample loss over the training set.
    pub final_losses: Vec<S>,
    /// Confusion matrix on the test set at the end of training.
    pub confusion: ConfusionMatrix,
    pub extremes: Option<ExtremeSamples<S>>,
    pub main: Network<S>,
    pub screener: Option<Network<S>>,
}

pub fn train_supervised<S: Scalar>(
    train: &Dataset<S>,
    test: &Dataset<S>,
    cfg: &SupervisedConfig<S>,
) -> Result<SupervisedOutput<S>> {
    if !cfg.mode.valid_for_supervised() {
        return Err(Error::invalid(format!(
            "mode {} is defined only for the RL task",
            cfg.mode
        )));
    }
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::invalid("epochs and batch_size must be positive"));
    }
    if cfg.batch_size > train.len() {
        return Err(Error::InsufficientOccupancy {
            size: train.len(),
            requested: cfg.batch_size,
        });
    }
    cfg.screener.validate()?;

    let d = train.feature_dim();
    let classes = train.num_classes;
    let mut main_dims = vec![d];
    main_dims.extend_from_slice(&cfg.main_hidden);
    main_dims.push(classes);
    let mut main = Network::<S>::mlp(&main_dims, false, &mut rng_for(cfg.seed, "main-init"));
    let mut main_opt = Optimizer::adam(cfg.learning_rate);

    let mut screener = cfg.mode.uses_screener().then(|| {
        let mut dims = vec![d];
        dims.extend_from_slice(&cfg.screener_hidden);
        dims.push(1);
        Network::<S>::mlp(&dims, true, &mut rng_for(cfg.seed, "screener-init"))
    });
    let mut screener_opt = Optimizer::adam(cfg.learning_rate);

    let mut tracker = screener.is_some().then(|| {
        let tracked: Vec<usize> = (0..cfg.track_count.min(train.len())).collect();
        WeightTracker::new(train, tracked)
    });

    let mut shuffle_rng = rng_for(cfg.seed, "shuffle");
    let mut sample_rng = rng_for(cfg.seed, "replay-sample");

    // Prioritized pool over sample indices: slot i of the buffer is sample i
    // (capacity = N, nothing is ever evicted). Everything starts at the max
    // priority so each sample is visited before its loss is known.
    let mut pool = if cfg.mode.uses_prioritized_replay() {
        let rcfg = ReplayConfig {
            capacity: train.len(),
            ..cfg.replay.clone()
        };
        let mut buf = PrioritizedBuffer::new(rcfg);
        for i in 0..train.len() {
            buf.push_with_max(i)?;
        }
        Some(buf)
    } else {
        None
    };

    let one = S::one();
    let mut rows = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut global_step: u64 = 0;

    for epoch in 1..=cfg.epochs as u64 {
        let mut loss_sum = S::zero();
        let mut weight_sum = S::zero();
        let mut batches: u64 = 0;

        if let Some(pool) = pool.as_mut() {
            let steps = train.len().div_ceil(cfg.batch_size);
            for _ in 0..steps {
                let sampled = pool.sample_batch(&mut sample_rng, cfg.batch_size, global_step)?;
                global_step += 1;
                let (inputs, targets) = train.batch(&sampled.items);
                let weights = match screener.as_mut() {
                    Some(s) => predict_weights(s, &inputs, &cfg.screener)?,
                    None => vec![one; cfg.batch_size],
                };
                let factors: Vec<S> = weights
                    .iter()
                    .zip(&sampled.is_weights)
                    .map(|(&w, &isw)| w * isw)
                    .collect();
                let (losses, applied) =
                    apply_weighted_update(&mut main, &mut main_opt, &inputs, &targets, &factors)?;
                if let Some(s) = screener.as_mut() {
                    train_screener_on_errors(s, &mut screener_opt, &inputs, &losses, &cfg.screener)?;
                }
                let eps = pool.config().epsilon;
                let new_priorities: Vec<S> = losses
                    .iter()
                    .map(|&l| priority_from_error(l, eps))
                    .collect::<Result<_>>()?;
                pool.update_priorities(&sampled.indices, &new_priorities)?;
                loss_sum = loss_sum + applied;
                weight_sum = weight_sum + mean(&weights);
                batches += 1;
            }
        } else {
            order.shuffle(&mut shuffle_rng);
            for chunk in order.chunks(cfg.batch_size) {
                let (inputs, targets) = train.batch(chunk);
                let weights = match screener.as_mut() {
                    Some(s) => predict_weights(s, &inputs, &cfg.screener)?,
                    None => vec![one; chunk.len()],
                };
                let (losses, applied) =
                    apply_weighted_update(&mut main, &mut main_opt, &inputs, &targets, &weights)?;
                if let Some(s) = screener.as_mut() {
                    train_screener_on_errors(s, &mut screener_opt, &inputs, &losses, &cfg.screener)?;
                }
                loss_sum = loss_sum + applied;
                weight_sum = weight_sum + mean(&weights);
                batches += 1;
            }
        }

        if let (Some(t), Some(s)) = (tracker.as_mut(), screener.as_mut()) {
            t.record(s, &cfg.screener, train, epoch)?;
        }

        let accuracy = test_accuracy(&mut main, test)?;
        rows.push(EpochRow {
            epoch,
            test_accuracy: accuracy,
            train_loss_mean: loss_sum / S::from_f(batches as f64),
            mean_screener_weight: screener
                .is_some()
                .then(|| weight_sum / S::from_f(batches as f64)),
        });
    }

    let final_losses = per_sample_losses(&mut main, train)?;
    let final_weights = match screener.as_mut() {
        Some(s) => Some(all_weights(s, &cfg.screener, train)?),
        None => None,
    };
    let extremes = final_weights
        .as_ref()
        .map(|w| extreme_samples(train, w, cfg.export_k))
        .transpose()?;
    let confusion = confusion_failures(&mut main, test)?;

    Ok(SupervisedOutput {
        rows,
        traces: tracker.map(WeightTracker::into_traces).unwrap_or_default(),
        final_weights,
        final_losses,
        confusion,
        extremes,
        main,
        screener,
    })
}

fn mean<S: Scalar>(values: &[S]) -> S {
    values.iter().cloned().sum::<S>() / S::from_us(values.len())
}

/// Fraction of test samples whose argmax prediction matches the label.
pub fn test_accuracy<S: Scalar>(net: &mut Network<S>, dataset: &Dataset<S>) -> Result<S> {
    let predictions = predict_classes(net, dataset)?;
    let correct = predictions
        .iter()
        .zip(&dataset.labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(S::from_us(correct) / S::from_us(dataset.len()))
}

/// Unweighted per-sample cross-entropy over the whole dataset.
pub fn per_sample_losses<S: Scalar>(net: &mut Network<S>, dataset: &Dataset<S>) -> Result<Vec<S>> {
    let chunk = 512;
    let indices: Vec<usize> = (0..dataset.len()).collect();
    let mut out = Vec::with_capacity(dataset.len());
    for block in indices.chunks(chunk) {
        let (inputs, targets) = dataset.batch(block);
        let logits = net.forward(&inputs)?;
        for (i, &t) in targets.iter().enumerate() {
            out.push(softmax_cross_entropy(logits.row(i), t)?);
        }
    }
    Ok(out)
}

/// Screener weight for every sample in the dataset.
pub fn all_weights<S: Scalar>(
    screener: &mut Network<S>,
    cfg: &ScreenerConfig<S>,
    dataset: &Dataset<S>,
) -> Result<Vec<S>> {
    let chunk = 512;
    let indices: Vec<usize> = (0..dataset.len()).collect();
    let mut out = Vec::with_capacity(dataset.len());
    for block in indices.chunks(chunk) {
        let (inputs, _) = dataset.batch(block);
        out.extend(predict_weights(screener, &inputs, cfg)?);
    }
    Ok(out)
}
