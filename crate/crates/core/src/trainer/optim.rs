use serde::{Deserialize, Serialize};

use crate::tensor::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OptimizerConfig {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Optimizer state for a list of parameter blocks.
#[derive(Clone, Debug)]
pub struct Optimizer {
    config: OptimizerConfig,
    steps: i32,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig, blocks: &[Matrix]) -> Self {
        let zeros = || blocks.iter().map(|b| Matrix::zeros(b.rows(), b.cols())).collect();
        Self {
            config,
            steps: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn step(&mut self, params: &mut [Matrix], grads: &[Matrix], lr: f64) {
        self.steps = self.steps.saturating_add(1);
        match self.config {
            OptimizerConfig::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (x, d) in p.as_mut_slice().iter_mut().zip(g.as_slice()) {
                        *x -= lr * d;
                    }
                }
            }
            OptimizerConfig::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powi(self.steps);
                let c2 = 1.0 - beta2.powi(self.steps);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    let (p, g) = (p.as_mut_slice(), g.as_slice());
                    let (m, v) = (m.as_mut_slice(), v.as_mut_slice());
                    for i in 0..p.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + epsilon);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_optimizers_descend_a_quadratic() {
        for cfg in [OptimizerConfig::default(), OptimizerConfig::Sgd] {
            let mut x = vec![Matrix::row_vector(&[3.0, -2.0])];
            let mut opt = Optimizer::new(cfg, &x);
            for _ in 0..2000 {
                let g = vec![x[0].map(|v| 2.0 * v)];
                opt.step(&mut x, &g, 0.01);
            }
            assert!(x[0].as_slice().iter().all(|v| v.abs() < 1e-2), "{cfg:?}: {:?}", x[0]);
        }
    }

    #[test]
    fn first_adam_step_has_size_lr() {
        let mut x = vec![Matrix::scalar(1.0)];
        let mut opt = Optimizer::new(OptimizerConfig::default(), &x);
        opt.step(&mut x, &[Matrix::scalar(123.0)], 0.1);
        assert!((x[0].item() - 0.9).abs() < 1e-9);
    }
}
