//! Post-hoc analyses: confusion matrices, per-sample weight traces, extreme
//! weight exports, rank correlation, PGM dumps.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Network;
use crate::rl::argmax;
use crate::scalar::Scalar;
use crate::screener::{predict_weights, ScreenerConfig};
use crate::supervised::dataset::Dataset;

/// C x C count grid; rows index ground truth, columns the prediction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn record(&mut self, truth: usize, prediction: usize) {
        self.counts[truth * self.classes + prediction] += 1;
    }

    pub fn count(&self, truth: usize, prediction: usize) -> u64 {
        self.counts[truth * self.classes + prediction]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes).map(|c| self.count(c, c)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        if self.total() == 0 {
            return 0.0;
        }
        self.correct() as f64 / self.total() as f64
    }

    /// Copy with the diagonal zeroed: only the failures remain.
    pub fn failures_only(&self) -> ConfusionMatrix {
        let mut out = self.clone();
        for c in 0..self.classes {
            out.counts[c * self.classes + c] = 0;
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for t in 0..self.classes {
            let row: Vec<String> = (0..self.classes).map(|p| self.count(t, p).to_string()).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Forward the whole dataset in chunks and return argmax predictions.
pub fn predict_classes<S: Scalar>(net: &mut Network<S>, dataset: &Dataset<S>) -> Result<Vec<usize>> {
    let chunk = 512;
    let mut out = Vec::with_capacity(dataset.len());
    let indices: Vec<usize> = (0..dataset.len()).collect();
    for block in indices.chunks(chunk) {
        let (inputs, _) = dataset.batch(block);
        let logits = net.forward(&inputs)?;
        for i in 0..logits.rows() {
            out.push(argmax(logits.row(i)));
        }
    }
    Ok(out)
}

/// Full confusion matrix over the dataset; pair with
/// [`ConfusionMatrix::failures_only`] for the failures view.
pub fn confusion_failures<S: Scalar>(
    net: &mut Network<S>,
    dataset: &Dataset<S>,
) -> Result<ConfusionMatrix> {
    let predictions = predict_classes(net, dataset)?;
    let mut matrix = ConfusionMatrix::new(dataset.num_classes);
    for (&truth, &pred) in dataset.labels.iter().zip(&predictions) {
        matrix.record(truth, pred);
    }
    Ok(matrix)
}

/// Weight history of one tracked sample across epochs.
#[derive(Clone, Debug)]
pub struct WeightTrace<S: Scalar> {
    pub sample_id: u64,
    pub epochs: Vec<u64>,
    pub weights: Vec<S>,
}

/// Records screener weights for a fixed set of samples at epoch boundaries.
#[derive(Clone, Debug)]
pub struct WeightTracker<S: Scalar> {
    indices: Vec<usize>,
    traces: Vec<WeightTrace<S>>,
}

impl<S: Scalar> WeightTracker<S> {
    pub fn new(dataset: &Dataset<S>, indices: Vec<usize>) -> Self {
        let traces = indices
            .iter()
            .map(|&i| WeightTrace {
                sample_id: dataset.sample_ids[i],
                epochs: Vec::new(),
                weights: Vec::new(),
            })
            .collect();
        WeightTracker { indices, traces }
    }

    /// Append the current screener weight for every tracked sample.
    pub fn record(
        &mut self,
        screener: &mut Network<S>,
        cfg: &ScreenerConfig<S>,
        dataset: &Dataset<S>,
        epoch: u64,
    ) -> Result<()> {
        if self.indices.is_empty() {
            return Ok(());
        }
        let (inputs, _) = dataset.batch(&self.indices);
        let weights = predict_weights(screener, &inputs, cfg)?;
        for (trace, w) in self.traces.iter_mut().zip(weights) {
            trace.epochs.push(epoch);
            trace.weights.push(w);
        }
        Ok(())
    }

    pub fn traces(&self) -> &[WeightTrace<S>] {
        &self.traces
    }

    pub fn into_traces(self) -> Vec<WeightTrace<S>> {
        self.traces
    }
}

/// Sample exported at the end of a run because its final weight was extreme.
#[derive(Clone, Debug)]
pub struct ExtremeSample<S: Scalar> {
    pub sample_id: u64,
    pub label: usize,
    pub weight: S,
}

#[derive(Clone, Debug)]
pub struct ExtremeSamples<S: Scalar> {
    pub highest: Vec<ExtremeSample<S>>,
    pub lowest: Vec<ExtremeSample<S>>,
}

/// The k samples with the highest and lowest final weights (ties broken by
/// sample id for determinism).
pub fn extreme_samples<S: Scalar>(
    dataset: &Dataset<S>,
    final_weights: &[S],
    k: usize,
) -> Result<ExtremeSamples<S>> {
    if final_weights.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            what: "final weights vs dataset",
            left: final_weights.len(),
            right: dataset.len(),
        });
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| {
        final_weights[b]
            .partial_cmp(&final_weights[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let sample = |i: usize| ExtremeSample {
        sample_id: dataset.sample_ids[i],
        label: dataset.labels[i],
        weight: final_weights[i],
    };
    let k = k.min(order.len());
    Ok(ExtremeSamples {
        highest: order[..k].iter().map(|&i| sample(i)).collect(),
        lowest: order[order.len() - k..].iter().rev().map(|&i| sample(i)).collect(),
    })
}

/// Spearman rank correlation between two equal-length value vectors.
/// Ties receive their average rank.
pub fn spearman<S: Scalar>(a: &[S], b: &[S]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            what: "spearman inputs",
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("spearman needs at least two observations"));
    }
    let ra = ranks(a);
    let rb = ranks(b);
    let n = ra.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in ra.iter().zip(&rb) {
        cov += (x - mean) * (y - mean);
        var_a += (x - mean) * (x - mean);
        var_b += (y - mean) * (y - mean);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(Error::invalid("spearman undefined for a constant vector"));
    }
    Ok(cov / (var_a * var_b).sqrt())
}

fn ranks<S: Scalar>(values: &[S]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // average rank for the tie group, 1-based
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Write one grayscale image as binary PGM (P5, maxval 255). Pixel values are
/// clamped to [0, 1] and scaled.
pub fn write_pgm<S: Scalar>(path: &Path, pixels: &[S], width: usize, height: usize) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::LengthMismatch {
            what: "pgm pixels vs dimensions",
            left: pixels.len(),
            right: width * height,
        });
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write!(file, "P5\n{width} {height}\n255\n").map_err(|e| Error::io(path, e))?;
    let bytes: Vec<u8> = pixels
        .iter()
        .map(|&p| (p.to_f().clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    file.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    Ok(())
}
