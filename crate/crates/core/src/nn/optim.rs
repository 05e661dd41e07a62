//! SGD and Adam parameter updates.

use crate::error::{Error, Result};
use crate::nn::network::Network;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub enum OptimizerKind<S: Scalar> {
    Sgd,
    Adam { beta1: S, beta2: S, epsilon: S },
}

/// Optimizer with per-parameter state (Adam first/second moments) and a step
/// counter. One optimizer instance drives exactly one network.
#[derive(Clone, Debug)]
pub struct Optimizer<S: Scalar> {
    pub kind: OptimizerKind<S>,
    pub learning_rate: S,
    first_moment: Vec<Vec<S>>,
    second_moment: Vec<Vec<S>>,
    step_count: u64,
}

impl<S: Scalar> Optimizer<S> {
    pub fn sgd(learning_rate: S) -> Self {
        Optimizer {
            kind: OptimizerKind::Sgd,
            learning_rate,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
        }
    }

    /// Adam with beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn adam(learning_rate: S) -> Self {
        Optimizer {
            kind: OptimizerKind::Adam {
                beta1: S::from_f(0.9),
                beta2: S::from_f(0.999),
                epsilon: S::from_f(1e-8),
            },
            learning_rate,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Apply one update from the accumulated gradients, then zero them.
    /// Every parameter must carry a gradient buffer.
    pub fn step(&mut self, net: &mut Network<S>) -> Result<()> {
        let mut params = net.parameters_mut();
        if params.iter().any(|p| p.grad().is_none()) {
            return Err(Error::MissingGradients);
        }
        self.step_count += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                let lr = self.learning_rate;
                for p in &mut params {
                    let g: Vec<S> = p.grad().unwrap().to_vec();
                    for (v, gi) in p.data_mut().iter_mut().zip(g) {
                        *v = *v - lr * gi;
                    }
                }
            }
            OptimizerKind::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                if self.first_moment.is_empty() {
                    self.first_moment = params.iter().map(|p| vec![S::zero(); p.len()]).collect();
                    self.second_moment = params.iter().map(|p| vec![S::zero(); p.len()]).collect();
                }
                if self.first_moment.len() != params.len()
                    || self
                        .first_moment
                        .iter()
                        .zip(&params)
                        .any(|(m, p)| m.len() != p.len())
                {
                    return Err(Error::invalid("optimizer state does not match network"));
                }
                let one = S::one();
                let t = S::from_f(self.step_count as f64);
                let bc1 = one - beta1.powf(t);
                let bc2 = one - beta2.powf(t);
                let lr = self.learning_rate;
                for ((p, m), v) in params
                    .iter_mut()
                    .zip(&mut self.first_moment)
                    .zip(&mut self.second_moment)
                {
                    let g: Vec<S> = p.grad().unwrap().to_vec();
                    for (((pv, gi), mi), vi) in
                        p.data_mut().iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut())
                    {
                        *mi = beta1 * *mi + (one - beta1) * gi;
                        *vi = beta2 * *vi + (one - beta2) * gi * gi;
                        let m_hat = *mi / bc1;
                        let v_hat = *vi / bc2;
                        *pv = *pv - lr * m_hat / (v_hat.sqrt() + epsilon);
                    }
                }
            }
        }
        for p in &mut params {
            p.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layer::Layer;
    use crate::nn::tensor::Tensor;

    fn one_param_net(value: f64) -> Network<f64> {
        let weight = Tensor::matrix(1, 1, vec![value]).unwrap();
        // Bias-free construction is not supported; keep the bias and give it
        // zero gradient as well.
        Network::new(vec![Layer::linear_from(weight, Tensor::zeros(vec![1])).unwrap()]).unwrap()
    }

    #[test]
    fn sgd_rule() {
        let mut net = one_param_net(1.0);
        net.forward(&Tensor::vector(&[2.0])).unwrap();
        net.backward(&Tensor::matrix(1, 1, vec![1.0]).unwrap()).unwrap();
        // dLoss/dw = 2, lr = 0.1 -> w = 1 - 0.1 * 2 = 0.8
        let mut opt = Optimizer::sgd(0.1);
        opt.step(&mut net).unwrap();
        assert!((net.parameters()[0].data()[0] - 0.8).abs() < 1e-15);
        // grads zeroed afterwards
        assert!(net.parameters()[0].grad().unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_grads_leave_parameters_unchanged() {
        let mut net = one_param_net(1.0);
        for p in net.parameters_mut() {
            p.grad_mut();
        }
        let mut opt = Optimizer::adam(0.001);
        opt.step(&mut net).unwrap();
        assert_eq!(net.parameters()[0].data()[0], 1.0);
    }

    #[test]
    fn missing_grads_error() {
        let mut net = one_param_net(1.0);
        let mut opt = Optimizer::sgd(0.1);
        assert!(matches!(opt.step(&mut net), Err(Error::MissingGradients)));
    }

    #[test]
    fn adam_first_step_hand_computation() {
        // g = 2, lr = 1e-3: after bias correction the first update is
        // lr * g / (|g| + eps); hand value 0.999000000004999999975.
        let mut net = one_param_net(1.0);
        net.parameters_mut()[0].grad_mut()[0] = 2.0;
        net.parameters_mut()[1].grad_mut();
        let mut opt = Optimizer::adam(1e-3);
        opt.step(&mut net).unwrap();
        let w = net.parameters()[0].data()[0];
        assert!((w - 0.999000000005).abs() < 1e-12, "w = {w}");
        assert_eq!(opt.step_count(), 1);
    }
}
