//! Adam with bias correction over a fixed sequence of parameter tensors.

use super::TrainConfig;

/// Optimizer state. Tensors are registered once, in a fixed order, and every
/// step must present parameter/gradient pairs in that same order.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: &TrainConfig, tensor_sizes: &[usize]) -> Self {
        Adam {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
            t: 0,
            m: tensor_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: tensor_sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    /// Applies one update. `pairs` must match the registered tensor layout.
    pub fn step(&mut self, pairs: &mut [(&mut [f64], &[f64])]) {
        assert_eq!(pairs.len(), self.m.len(), "tensor count changed");
        self.t += 1;
        let t = self.t as i32;
        // Fold both bias corrections into the step size.
        let lr_t = self.lr * (1.0 - self.beta2.powi(t)).sqrt() / (1.0 - self.beta1.powi(t));
        for (k, (params, grads)) in pairs.iter_mut().enumerate() {
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            assert_eq!(params.len(), m.len(), "tensor size changed");
            assert_eq!(grads.len(), m.len());
            for i in 0..params.len() {
                let g = grads[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                params[i] -= lr_t * m[i] / (v[i].sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_descends_a_quadratic() {
        // Minimize f(x) = (x - 3)^2 from x = 0.
        let cfg = TrainConfig {
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let mut adam = Adam::new(&cfg, &[1]);
        let mut x = [0.0f64];
        for _ in 0..500 {
            let g = [2.0 * (x[0] - 3.0)];
            adam.step(&mut [(&mut x, &g)]);
        }
        assert!((x[0] - 3.0).abs() < 1e-3, "x = {}", x[0]);
    }

    #[test]
    fn first_step_is_learning_rate_sized() {
        // With bias correction the very first update has magnitude ~lr.
        let cfg = TrainConfig {
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let mut adam = Adam::new(&cfg, &[1]);
        let mut x = [1.0f64];
        adam.step(&mut [(&mut x, &[0.7])]);
        assert!((1.0 - x[0] - 0.05).abs() < 1e-6);
    }
}
