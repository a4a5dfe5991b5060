//! First-order optimizers over lists of matrices.
//!
//! State is keyed by position in the parameter list, so callers must pass
//! parameters in the same order on every step.

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OptimizerKind {
    Sgd,
    Adam {
        #[serde(default = "default_beta1")]
        beta1: f64,
        #[serde(default = "default_beta2")]
        beta2: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Self {
        Optimizer {
            kind,
            lr,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::new(OptimizerKind::Sgd, lr)
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(OptimizerKind::adam(), lr)
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update in place. `params[i]` moves against `grads[i]`.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[&Array2<f64>]) {
        assert_eq!(params.len(), grads.len(), "one gradient per parameter");
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    p.scaled_add(-self.lr, g);
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                if self.first.len() != params.len() {
                    self.first = params.iter().map(|p| Array2::zeros(p.raw_dim())).collect();
                    self.second = self.first.clone();
                }
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                let lr = self.lr;
                for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
                    Zip::from(&mut **p)
                        .and(*g)
                        .and(&mut self.first[i])
                        .and(&mut self.second[i])
                        .for_each(|p, &g, m, v| {
                            *m = beta1 * *m + (1.0 - beta1) * g;
                            *v = beta2 * *v + (1.0 - beta2) * g * g;
                            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                        });
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn sgd_moves_against_gradient() {
        let mut p = array![[1.0, 2.0]];
        let g = array![[0.5, -1.0]];
        Optimizer::sgd(0.1).step(&mut [&mut p], &[&g]);
        assert_eq!(p, array![[0.95, 2.1]]);
    }

    #[test]
    fn adam_first_step_has_magnitude_lr() {
        let mut p = array![[0.0, 0.0]];
        let g = array![[3.0, -1e-3]];
        Optimizer::adam(0.01).step(&mut [&mut p], &[&g]);
        assert!((p[[0, 0]] + 0.01).abs() < 1e-9);
        assert!((p[[0, 1]] - 0.01).abs() < 1e-6);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = array![[4.0, -3.0]];
        let mut opt = Optimizer::adam(0.05);
        for _ in 0..2000 {
            let g = p.mapv(|x| 2.0 * x);
            opt.step(&mut [&mut p], &[&g]);
        }
        assert!(p.iter().all(|x| x.abs() < 1e-2));
    }
}
