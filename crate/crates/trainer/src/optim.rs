//! SGD and Adam over flat parameter buffers.

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerConfig {
    Sgd { lr: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self::adam(1e-3)
    }
}

impl OptimizerConfig {
    pub fn sgd(lr: f64) -> Self {
        Self::Sgd { lr }
    }

    /// Adam with betas 0.9 / 0.999 and eps 1e-8.
    pub fn adam(lr: f64) -> Self {
        Self::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Self::Sgd { lr } | Self::Adam { lr, .. } => lr,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sgd { .. } => "sgd",
            Self::Adam { .. } => "adam",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.lr();
        if !(lr.is_finite() && lr > 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "learning rate must be positive, got {lr}"
            )));
        }
        if let Self::Adam { beta1, beta2, eps, .. } = *self {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return Err(TrainError::InvalidConfig(
                    "adam needs betas in [0, 1) and eps > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Optimizer state: step count and, for Adam, first and second moments per
/// parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    config: OptimizerConfig,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            step: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn config(&self) -> OptimizerConfig {
        self.config
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) {
        assert_eq!(params.len(), grads.len(), "parameter/gradient layout mismatch");
        self.step += 1;
        match self.config {
            OptimizerConfig::Sgd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (p, g) in p.iter_mut().zip(g.iter()) {
                        *p -= lr * g;
                    }
                }
            }
            OptimizerConfig::Adam { lr, beta1, beta2, eps } => {
                if self.first_moment.is_empty() {
                    self.first_moment = grads.iter().map(|g| vec![0.0; g.len()]).collect();
                    self.second_moment = self.first_moment.clone();
                }
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first_moment)
                    .zip(&mut self.second_moment)
                {
                    for i in 0..g.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        let m_hat = m[i] / c1;
                        let v_hat = v[i] / c2;
                        p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
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
    fn sgd_step() {
        let mut opt = Optimizer::new(OptimizerConfig::sgd(0.1));
        let mut p = vec![1.0, -2.0];
        opt.step(&mut [&mut p[..]], &[&[10.0, -10.0][..]]);
        assert_eq!(p, vec![0.0, -1.0]);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // With bias correction the first update is lr * g / (|g| + eps).
        let mut opt = Optimizer::new(OptimizerConfig::adam(1e-3));
        let mut p = [0.0, 0.0, 0.0];
        opt.step(&mut [&mut p[..]], &[&[4.0, -0.5, 0.0][..]]);
        assert!((p[0] + 1e-3).abs() < 1e-10);
        assert!((p[1] - 1e-3).abs() < 1e-10);
        assert_eq!(p[2], 0.0);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn adam_minimizes_a_quadratic() {
        let mut opt = Optimizer::new(OptimizerConfig::adam(0.05));
        let mut p = vec![3.0, -4.0];
        for _ in 0..2000 {
            let g = [2.0 * p[0], 2.0 * p[1]];
            opt.step(&mut [&mut p[..]], &[&g[..]]);
        }
        assert!(p[0].abs() < 1e-3 && p[1].abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn validation() {
        assert!(OptimizerConfig::sgd(0.0).validate().is_err());
        assert!(OptimizerConfig::adam(-1.0).validate().is_err());
        assert!(OptimizerConfig::adam(1e-3).validate().is_ok());
    }
}
