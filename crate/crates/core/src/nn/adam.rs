use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adaptive moment estimation with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Applies one update in place. Fails without touching anything if any
    /// gradient is NaN or infinite.
    pub fn step<M: Model>(&mut self, params: &mut M, grads: &M) -> Result<()> {
        let g = grads.tensors();
        if g.iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFiniteGradient);
        }
        if self.m.is_empty() {
            self.m = g.iter().map(|t| vec![0.0; t.len()]).collect();
            self.v = self.m.clone();
        }
        let p = params.tensors_mut();
        if p.len() != g.len() || p.len() != self.m.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                actual: p.len(),
            });
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((pt, gt), mt), vt) in p.into_iter().zip(g).zip(&mut self.m).zip(&mut self.v) {
            if pt.len() != gt.len() || pt.len() != mt.len() {
                return Err(Error::Dimension {
                    expected: mt.len(),
                    actual: pt.len(),
                });
            }
            for k in 0..pt.len() {
                let gk = gt[k];
                mt[k] = beta1 * mt[k] + (1.0 - beta1) * gk;
                vt[k] = beta2 * vt[k] + (1.0 - beta2) * gk * gk;
                let m_hat = mt[k] / c1;
                let v_hat = vt[k] / c2;
                pt[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseNet;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut net = DenseNet::zeros(&[2, 2]);
        net.bias_mut(0)[0] = 0.7;
        let before = net.clone();
        let mut opt = Adam::new(AdamConfig::default());
        let g = net.zeros_like();
        for _ in 0..5 {
            opt.step(&mut net, &g).unwrap();
        }
        assert_eq!(net, before);
        assert_eq!(opt.steps(), 5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = DenseNet::zeros(&[1, 1]);
        let mut g = net.zeros_like();
        g.weight_mut(0)[[0, 0]] = 3.0;
        g.bias_mut(0)[0] = -0.02;
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut net, &g).unwrap();
        assert!((net.weight(0)[[0, 0]] + 1e-3).abs() < 1e-9);
        assert!((net.bias(0)[0] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn nan_gradient_fails_fast() {
        let mut net = DenseNet::zeros(&[1, 1]);
        let mut g = net.zeros_like();
        g.bias_mut(0)[0] = f64::NAN;
        let mut opt = Adam::new(AdamConfig::default());
        assert!(matches!(
            opt.step(&mut net, &g),
            Err(Error::NonFiniteGradient)
        ));
        assert_eq!(opt.steps(), 0);
    }

    #[test]
    fn quadratic_loss_decreases_monotonically() {
        // minimize (w - 2)^2 from w = 0
        let mut net = DenseNet::zeros(&[1, 1]);
        let mut opt = Adam::new(AdamConfig {
            learning_rate: 1e-2,
            ..Default::default()
        });
        let loss = |w: f64| (w - 2.0).powi(2);
        let mut prev = loss(net.weight(0)[[0, 0]]);
        for _ in 0..100 {
            let w = net.weight(0)[[0, 0]];
            let mut g = net.zeros_like();
            g.weight_mut(0)[[0, 0]] = 2.0 * (w - 2.0);
            opt.step(&mut net, &g).unwrap();
            let l = loss(net.weight(0)[[0, 0]]);
            assert!(l < prev);
            prev = l;
        }
    }
}
