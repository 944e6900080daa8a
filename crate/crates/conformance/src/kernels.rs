//! The operations under test, behind a trait so that deliberately broken
//! implementations can be run through the same suite.

use sparse_softmax::{ce_loss, sparse_ce_loss, sparse_softmax, softmax, top_k, LogitVector, TargetPolicy};

#[derive(Debug, Clone, PartialEq)]
pub struct LossEval {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

/// Inputs handed to these methods are always finite and non-empty, with
/// `k >= 1` and `t < z.len()`.
pub trait Kernels: Sync {
    fn name(&self) -> &str;
    /// Support indices in ascending order.
    fn top_k(&self, z: &[f64], k: usize) -> Vec<usize>;
    fn softmax(&self, z: &[f64]) -> Vec<f64>;
    fn sparse_softmax(&self, z: &[f64], k: usize) -> Vec<f64>;
    fn ce_loss(&self, z: &[f64], t: usize) -> LossEval;
    fn sparse_ce_loss(&self, z: &[f64], t: usize, k: usize, force_include_target: bool) -> LossEval;
}

/// The library implementation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Reference;

fn logits(z: &[f64]) -> LogitVector {
    LogitVector::from_slice(z).expect("kernel inputs are valid")
}

impl Kernels for Reference {
    fn name(&self) -> &str {
        "reference"
    }

    fn top_k(&self, z: &[f64], k: usize) -> Vec<usize> {
        top_k(&logits(z), k).expect("valid k").indices().to_vec()
    }

    fn softmax(&self, z: &[f64]) -> Vec<f64> {
        softmax(&logits(z)).into_values()
    }

    fn sparse_softmax(&self, z: &[f64], k: usize) -> Vec<f64> {
        sparse_softmax(&logits(z), k).expect("valid k").into_values()
    }

    fn ce_loss(&self, z: &[f64], t: usize) -> LossEval {
        let r = ce_loss(&logits(z), t).expect("valid target");
        LossEval { loss: r.loss, gradient: r.gradient }
    }

    fn sparse_ce_loss(&self, z: &[f64], t: usize, k: usize, force_include_target: bool) -> LossEval {
        let policy = TargetPolicy::from_flag(force_include_target);
        let r = sparse_ce_loss(&logits(z), t, k, policy).expect("valid target and k");
        LossEval { loss: r.loss, gradient: r.gradient }
    }
}
