//! In-memory classification datasets and the synthetic two-cluster task.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::scalar::Scalar;
use crate::seed::rng_for;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug)]
pub struct Dataset<S: Scalar> {
    /// N x D inputs.
    pub inputs: Tensor<S>,
    pub labels: Vec<usize>,
    pub split: Split,
    /// Stable per-sample ids (row index at load time).
    pub sample_ids: Vec<u64>,
    pub num_classes: usize,
    /// Synthetic data marks ambiguous samples; None for file-backed datasets.
    pub hard: Option<Vec<bool>>,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(inputs: Tensor<S>, labels: Vec<usize>, split: Split, num_classes: usize) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "dataset inputs vs labels",
                left: inputs.rows(),
                right: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        let sample_ids = (0..labels.len() as u64).collect();
        Ok(Dataset {
            inputs,
            labels,
            split,
            sample_ids,
            num_classes,
            hard: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.inputs.row_len()
    }

    /// Gather rows into a batch tensor plus labels.
    pub fn batch(&self, indices: &[usize]) -> (Tensor<S>, Vec<usize>) {
        let d = self.feature_dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.inputs.row(i));
            labels.push(self.labels[i]);
        }
        (Tensor::matrix(indices.len(), d, data).unwrap(), labels)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Two 2-D clusters separated along the first coordinate, with a
    /// controlled fraction of samples placed inside the ambiguous central
    /// band.
    TwoGaussiansOverlap,
}

/// Half-width of the ambiguous band around x = 0.
const BAND: f64 = 0.5;
/// Spread of the easy (out-of-band) half-normal mass.
const SPREAD: f64 = 0.8;

/// Build a synthetic dataset. `overlap` in [0, 1) is the expected fraction of
/// "hard" samples: those are placed uniformly inside the central band with a
/// label uncorrelated to their position, so a fraction of them is irreducibly
/// ambiguous. Easy samples sit strictly outside the band on their class side,
/// so `overlap = 0` yields a linearly separable problem.
pub fn make_synthetic<S: Scalar>(
    kind: SyntheticKind,
    n: usize,
    overlap: f64,
    seed: u64,
    split: Split,
) -> Result<Dataset<S>> {
    let SyntheticKind::TwoGaussiansOverlap = kind;
    if n < 4 {
        return Err(Error::invalid(format!("synthetic dataset needs n >= 4, got {n}")));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::invalid(format!("overlap must be in [0, 1), got {overlap}")));
    }
    let mut rng = rng_for(seed, "synthetic-data");
    let mut data = Vec::with_capacity(n * 2);
    let mut labels = Vec::with_capacity(n);
    let mut hard = Vec::with_capacity(n);
    for _ in 0..n {
        let label = usize::from(rng.gen::<f64>() < 0.5);
        let is_hard = rng.gen::<f64>() < overlap;
        let x = if is_hard {
            rng.gen_range(-BAND..BAND)
        } else {
            let sign = if label == 0 { -1.0 } else { 1.0 };
            sign * (BAND + standard_normal(&mut rng).abs() * SPREAD)
        };
        let y = standard_normal(&mut rng);
        data.push(S::from_f(x));
        data.push(S::from_f(y));
        labels.push(label);
        hard.push(is_hard);
    }
    let mut ds = Dataset::new(Tensor::matrix(n, 2, data)?, labels, split, 2)?;
    ds.hard = Some(hard);
    Ok(ds)
}

/// Box-Muller standard normal draw (two uniforms per sample keeps the stream
/// layout simple and deterministic).
fn standard_normal(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let a = make_synthetic::<f64>(SyntheticKind::TwoGaussiansOverlap, 64, 0.2, 7, Split::Train).unwrap();
        let b = make_synthetic::<f64>(SyntheticKind::TwoGaussiansOverlap, 64, 0.2, 7, Split::Train).unwrap();
        assert_eq!(a.inputs.data(), b.inputs.data());
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn zero_overlap_is_separable_by_sign() {
        let ds = make_synthetic::<f64>(SyntheticKind::TwoGaussiansOverlap, 1_000, 0.0, 3, Split::Train).unwrap();
        for i in 0..ds.len() {
            let x = ds.inputs.row(i)[0];
            let predicted = usize::from(x > 0.0);
            assert_eq!(predicted, ds.labels[i], "sample {i} at x = {x}");
        }
        assert!(ds.hard.as_ref().unwrap().iter().all(|&h| !h));
    }

    #[test]
    fn overlap_fraction_measured() {
        let ds = make_synthetic::<f64>(SyntheticKind::TwoGaussiansOverlap, 10_000, 0.2, 11, Split::Train).unwrap();
        let in_band = (0..ds.len())
            .filter(|&i| ds.inputs.row(i)[0].abs() < BAND)
            .count();
        let frac = in_band as f64 / ds.len() as f64;
        assert!((frac - 0.2).abs() < 0.03, "band mass {frac}");
        // hard flags coincide with the band by construction
        let hard = ds.hard.as_ref().unwrap();
        for i in 0..ds.len() {
            assert_eq!(hard[i], ds.inputs.row(i)[0].abs() < BAND);
        }
    }

    #[test]
    fn batch_gathers_rows() {
        let ds = make_synthetic::<f64>(SyntheticKind::TwoGaussiansOverlap, 16, 0.2, 0, Split::Train).unwrap();
        let (inputs, labels) = ds.batch(&[3, 5]);
        assert_eq!(inputs.rows(), 2);
        assert_eq!(inputs.row(0), ds.inputs.row(3));
        assert_eq!(labels, vec![ds.labels[3], ds.labels[5]]);
    }

    #[test]
    fn label_validation() {
        let t = Tensor::<f64>::matrix(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(Dataset::new(t, vec![0, 5], Split::Train, 2).is_err());
    }
}
