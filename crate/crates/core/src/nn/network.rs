//! Ordered stack of layers with cached activations for reverse-mode
//! gradients.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::layer::Layer;
use crate::nn::tensor::Tensor;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Network<S: Scalar> {
    layers: Vec<Layer<S>>,
    /// acts[0] is the last forward input; acts[i + 1] the output of layer i.
    acts: Option<Vec<Tensor<S>>>,
}

impl<S: Scalar> Network<S> {
    pub fn new(layers: Vec<Layer<S>>) -> Result<Self> {
        // Adjacent layer shapes must compose.
        let mut dim: Option<usize> = None;
        for (i, layer) in layers.iter().enumerate() {
            if let (Some(prev), Some(need)) = (dim, layer.in_dim()) {
                if prev != need {
                    return Err(Error::ShapeMismatch {
                        layer: i,
                        expected: need,
                        actual: prev,
                    });
                }
            }
            if let Some(out) = layer.out_dim() {
                dim = Some(out);
            }
        }
        Ok(Network { layers, acts: None })
    }

    /// MLP with the given layer widths and ReLU between linear layers.
    /// `sigmoid_output` appends a Sigmoid after the final linear layer (used
    /// by the weight-regression network).
    pub fn mlp(dims: &[usize], sigmoid_output: bool, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "mlp needs at least input and output dims");
        let mut layers = Vec::new();
        for w in dims.windows(2) {
            layers.push(Layer::linear(w[0], w[1], rng));
            layers.push(Layer::Relu);
        }
        layers.pop();
        if sigmoid_output {
            layers.push(Layer::Sigmoid);
        }
        Network::new(layers).unwrap()
    }

    pub fn layers(&self) -> &[Layer<S>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<S>] {
        self.acts = None;
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Input feature dimension (first linear layer), if any.
    pub fn in_dim(&self) -> Option<usize> {
        self.layers.iter().find_map(Layer::in_dim)
    }

    pub fn out_dim(&self) -> Option<usize> {
        self.layers.iter().rev().find_map(Layer::out_dim)
    }

    /// Run the network, caching per-layer activations for `backward`.
    pub fn forward(&mut self, x: &Tensor<S>) -> Result<Tensor<S>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut cur = x.clone();
        cur.clear_grad();
        acts.push(cur);
        for (i, layer) in self.layers.iter().enumerate() {
            let inp = acts.last().unwrap();
            if let Some(need) = layer.in_dim() {
                if inp.row_len() != need {
                    return Err(Error::ShapeMismatch {
                        layer: i,
                        expected: need,
                        actual: inp.row_len(),
                    });
                }
            }
            let out = layer.forward(inp);
            acts.push(out);
        }
        let out = acts.last().unwrap().clone();
        self.acts = Some(acts);
        Ok(out)
    }

    /// Accumulate parameter gradients for the scalar loss whose gradient with
    /// respect to the network output is `upstream`.
    pub fn backward(&mut self, upstream: &Tensor<S>) -> Result<()> {
        let acts = self.acts.as_ref().ok_or(Error::BackwardBeforeForward)?;
        let out = acts.last().unwrap();
        if upstream.len() != out.len() {
            return Err(Error::LengthMismatch {
                what: "upstream gradient vs network output",
                left: upstream.len(),
                right: out.len(),
            });
        }
        // Take the cache so layer grads can be written while reading it.
        let acts = self.acts.take().unwrap();
        let mut grad = upstream.clone();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            grad = layer.backward(&acts[i], &acts[i + 1], &grad);
        }
        self.acts = Some(acts);
        Ok(())
    }

    pub fn parameters(&self) -> Vec<&Tensor<S>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            if let Layer::Linear { weight, bias } = layer {
                out.push(weight);
                out.push(bias);
            }
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            if let Layer::Linear { weight, bias } = layer {
                out.push(weight);
                out.push(bias);
            }
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    /// Sum of |p| over every parameter entry.
    pub fn l1_norm(&self) -> S {
        self.parameters()
            .iter()
            .flat_map(|p| p.data().iter())
            .map(|v| v.abs())
            .sum()
    }

    /// Copy parameter values from another network of identical architecture
    /// (target-network sync). Gradients and caches are not copied.
    pub fn sync_from(&mut self, other: &Self) {
        let src: Vec<Vec<S>> = other.parameters().iter().map(|p| p.data().to_vec()).collect();
        for (dst, s) in self.parameters_mut().into_iter().zip(src) {
            dst.data_mut().copy_from_slice(&s);
        }
    }
}
