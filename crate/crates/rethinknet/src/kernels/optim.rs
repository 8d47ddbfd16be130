//! Adam with Nesterov momentum (Nadam).
//!
//! The update keeps exponential moving averages m and v of the gradient and
//! its square with the usual bias corrections, then applies the Nesterov
//! look-ahead combination
//! `lr * (b1 * m_hat + (1 - b1) * g / (1 - b1^t)) / (sqrt(v_hat) + eps)`.

use crate::error::{Error, Result};

use super::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NadamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for NadamParams {
    fn default() -> Self {
        NadamParams {
            learning_rate: 0.002,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct NadamState {
    pub hyper: NadamParams,
    step: usize,
    first_moment: Vec<Tensor>,
    second_moment: Vec<Tensor>,
}

impl NadamState {
    pub fn new(hyper: NadamParams) -> Self {
        NadamState {
            hyper,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn step_count(&self) -> usize {
        self.step
    }

    /// One update over a flat list of parameter tensors and their gradients.
    /// Moment tensors are allocated lazily on the first call and must keep
    /// matching shapes afterwards.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &[&Tensor]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::dimension("nadam_step", params.len(), grads.len()));
        }
        if self.first_moment.is_empty() {
            self.first_moment = params.iter().map(|p| Tensor::zeros(p.dim())).collect();
            self.second_moment = self.first_moment.clone();
        }
        if self.first_moment.len() != params.len() {
            return Err(Error::dimension(
                "nadam_step",
                self.first_moment.len(),
                params.len(),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let NadamParams {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        let bias1 = 1.0 - beta1.powi(t);
        let bias2 = 1.0 - beta2.powi(t);

        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first_moment.iter_mut().zip(&mut self.second_moment))
        {
            if param.dim() != grad.dim() || param.dim() != m.dim() {
                return Err(Error::dimension(
                    "nadam_step",
                    format!("{:?}", param.dim()),
                    format!("{:?}", grad.dim()),
                ));
            }
            for ((p, &g), (mi, vi)) in param
                .iter_mut()
                .zip(grad.iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / bias1;
                let v_hat = *vi / bias2;
                let lookahead = beta1 * m_hat + (1.0 - beta1) * g / bias1;
                *p -= learning_rate * lookahead / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}
