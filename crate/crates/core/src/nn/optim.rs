//! Stochastic gradient descent with momentum and time-based decay.

use super::tensor::{GradStore, ParamId, ParamStore};

/// SGD with momentum. The learning rate at epoch `e` (0-based) is
/// `lr0 / (1 + decay * e)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sgd {
    pub lr0: f64,
    pub decay: f64,
    pub momentum: f64,
}

impl Sgd {
    pub fn learning_rate(&self, epoch: usize) -> f64 {
        self.lr0 / (1.0 + self.decay * epoch as f64)
    }

    /// One update: `v <- momentum * v - lr * g; theta <- theta + v`.
    pub fn step(&self, params: &mut ParamStore, grads: &GradStore, epoch: usize) {
        let lr = self.learning_rate(epoch);
        for i in 0..params.len() {
            let id = ParamId(i);
            let grad = grads.grad(id);
            let entry = params.get_mut(id);
            for ((theta, v), g) in
                entry.tensor.values_mut().iter_mut().zip(&mut entry.velocity).zip(grad)
            {
                *v = self.momentum * *v - lr * g;
                *theta += *v;
            }
        }
    }
}
