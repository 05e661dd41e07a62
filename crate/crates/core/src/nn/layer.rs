//! Layers: dense affine transform plus the two activations used by the
//! networks in this crate.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

/// Numerically stable logistic function, clamped into the open interval
/// (0, 1) so that downstream weight invariants hold for every finite input.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    let one = S::one();
    let y = if x >= S::zero() {
        one / (one + (-x).exp())
    } else {
        let e = x.exp();
        e / (one + e)
    };
    // Largest representable value below 1.
    let hi = one - S::epsilon() * S::from_f(0.5);
    y.max(S::min_positive_value()).min(hi)
}

#[derive(Clone, Debug)]
pub enum Layer<S: Scalar> {
    /// y = x W + b with W of shape (fan_in, fan_out) and b of shape (fan_out).
    Linear { weight: Tensor<S>, bias: Tensor<S> },
    Relu,
    Sigmoid,
}

impl<S: Scalar> Layer<S> {
    /// He-style uniform init: W ~ U[-sqrt(6/fan_in), sqrt(6/fan_in)], b = 0.
    pub fn linear(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / fan_in as f64).sqrt();
        let data: Vec<S> = (0..fan_in * fan_out)
            .map(|_| S::from_f(rng.gen_range(-limit..limit)))
            .collect();
        Layer::Linear {
            weight: Tensor::new(vec![fan_in, fan_out], data).unwrap(),
            bias: Tensor::zeros(vec![fan_out]),
        }
    }

    /// Linear layer from explicit parameters (tests, crafted networks).
    pub fn linear_from(weight: Tensor<S>, bias: Tensor<S>) -> Result<Self> {
        if weight.shape().len() != 2 {
            return Err(Error::invalid("linear weight must be rank 2"));
        }
        if bias.shape() != [weight.shape()[1]] {
            return Err(Error::LengthMismatch {
                what: "linear bias vs fan_out",
                left: bias.len(),
                right: weight.shape()[1],
            });
        }
        Ok(Layer::Linear { weight, bias })
    }

    /// Input features this layer requires, if constrained.
    pub fn in_dim(&self) -> Option<usize> {
        match self {
            Layer::Linear { weight, .. } => Some(weight.shape()[0]),
            _ => None,
        }
    }

    pub fn out_dim(&self) -> Option<usize> {
        match self {
            Layer::Linear { weight, .. } => Some(weight.shape()[1]),
            _ => None,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Linear { weight, bias } => weight.len() + bias.len(),
            _ => 0,
        }
    }

    pub(crate) fn forward(&self, x: &Tensor<S>) -> Tensor<S> {
        match self {
            Layer::Linear { weight, bias } => {
                let (fan_in, fan_out) = (weight.shape()[0], weight.shape()[1]);
                let rows = x.rows();
                debug_assert_eq!(x.row_len(), fan_in);
                let mut out = Tensor::zeros(vec![rows, fan_out]);
                let w = weight.data();
                let b = bias.data();
                for r in 0..rows {
                    let xr = x.row(r);
                    let or = out.row_mut(r);
                    or.copy_from_slice(b);
                    for (i, &xi) in xr.iter().enumerate() {
                        let wrow = &w[i * fan_out..(i + 1) * fan_out];
                        for (o, &wv) in or.iter_mut().zip(wrow) {
                            *o = *o + xi * wv;
                        }
                    }
                }
                out
            }
            Layer::Relu => {
                let mut out = x.clone();
                out.clear_grad();
                for v in out.data_mut() {
                    if *v < S::zero() {
                        *v = S::zero();
                    }
                }
                out
            }
            Layer::Sigmoid => {
                let mut out = x.clone();
                out.clear_grad();
                for v in out.data_mut() {
                    *v = sigmoid(*v);
                }
                out
            }
        }
    }

    /// Accumulate parameter gradients and return the gradient with respect to
    /// this layer's input. `input`/`output` are the cached forward tensors.
    pub(crate) fn backward(
        &mut self,
        input: &Tensor<S>,
        output: &Tensor<S>,
        upstream: &Tensor<S>,
    ) -> Tensor<S> {
        match self {
            Layer::Linear { weight, bias } => {
                let (fan_in, fan_out) = (weight.shape()[0], weight.shape()[1]);
                let rows = input.rows();
                let mut dx = Tensor::zeros(vec![rows, fan_in]);
                {
                    let w = weight.data();
                    for r in 0..rows {
                        let up = upstream.row(r);
                        let dxr = dx.row_mut(r);
                        for i in 0..fan_in {
                            let wrow = &w[i * fan_out..(i + 1) * fan_out];
                            let mut acc = S::zero();
                            for (u, wv) in up.iter().zip(wrow) {
                                acc = acc + *u * *wv;
                            }
                            dxr[i] = acc;
                        }
                    }
                }
                let dw = weight.grad_mut();
                for r in 0..rows {
                    let xr = input.row(r);
                    let up = upstream.row(r);
                    for (i, &xi) in xr.iter().enumerate() {
                        let dwrow = &mut dw[i * fan_out..(i + 1) * fan_out];
                        for (d, &u) in dwrow.iter_mut().zip(up) {
                            *d = *d + xi * u;
                        }
                    }
                }
                let db = bias.grad_mut();
                for r in 0..rows {
                    for (d, &u) in db.iter_mut().zip(upstream.row(r)) {
                        *d = *d + u;
                    }
                }
                dx
            }
            Layer::Relu => {
                let mut dx = upstream.clone();
                dx.clear_grad();
                for (d, &x) in dx.data_mut().iter_mut().zip(input.data()) {
                    if x <= S::zero() {
                        *d = S::zero();
                    }
                }
                dx
            }
            Layer::Sigmoid => {
                let mut dx = upstream.clone();
                dx.clear_grad();
                let one = S::one();
                for (d, &y) in dx.data_mut().iter_mut().zip(output.data()) {
                    *d = *d * y * (one - y);
                }
                dx
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;

    #[test]
    fn relu_definition() {
        let layer = Layer::<f64>::Relu;
        let out = layer.forward(&Tensor::vector(&[-1.0, 0.0, 2.0]));
        assert_eq!(out.data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let layer = Layer::<f64>::Sigmoid;
        let out = layer.forward(&Tensor::vector(&[0.0]));
        assert_eq!(out.data(), &[0.5]);
    }

    #[test]
    fn sigmoid_strictly_inside_unit_interval() {
        for &x in &[-1e9f64, -800.0, -40.0, 0.0, 40.0, 800.0, 1e9] {
            let y = sigmoid(x);
            assert!(y > 0.0 && y < 1.0, "sigmoid({x}) = {y}");
        }
        let y32 = sigmoid(1e9f32);
        assert!(y32 > 0.0 && y32 < 1.0);
    }

    #[test]
    fn identity_linear_passes_input_through() {
        let weight = Tensor::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let bias = Tensor::zeros(vec![2]);
        let layer = Layer::linear_from(weight, bias).unwrap();
        let out = layer.forward(&Tensor::vector(&[1.0, 2.0]));
        assert_eq!(out.data(), &[1.0, 2.0]);
    }

    #[test]
    fn he_init_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let layer = Layer::<f64>::linear(16, 8, &mut rng);
        if let Layer::Linear { weight, bias } = &layer {
            let limit = (6.0 / 16.0f64).sqrt();
            assert!(weight.data().iter().all(|w| w.abs() < limit));
            assert!(bias.data().iter().all(|&b| b == 0.0));
        } else {
            unreachable!()
        }
    }
}
