//! Cross-entropy losses with closed-form gradients.
//!
//! The sparse loss treats the support set as constant in `z`: within a region
//! where the top-k membership does not change the loss is smooth, and on a
//! tie the gradient is the one of the lowest-index selection.

use crate::error::Result;
use crate::logits::LogitVector;
use crate::topk::{top_k, SupportSet};
use crate::transform::{masked_log_sum_exp, masked_softmax};

/// Loss value and its gradient with respect to the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

/// What the sparse loss does with a target that is not among the top k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetPolicy {
    /// Keep the top-k set as is. The loss is `log sum_{Omega_k} e^z - z_t`
    /// and the target still receives a `-1` gradient.
    #[default]
    Literal,
    /// Swap the target in for the lowest-ranked member of the top-k set.
    ForceInclude,
}

impl TargetPolicy {
    pub fn from_flag(force_include_target: bool) -> Self {
        if force_include_target {
            TargetPolicy::ForceInclude
        } else {
            TargetPolicy::Literal
        }
    }

    pub fn forces_target(self) -> bool {
        self == TargetPolicy::ForceInclude
    }
}

fn loss_on_support(z: &LogitVector, target: usize, support: &[usize]) -> LossResult {
    let values = z.as_slice();
    // (m - z_t) is exact when the target holds the maximum.
    let (m, r) = masked_log_sum_exp(values, support);
    let loss = (m - values[target]) + r;
    let mut gradient = masked_softmax(values, support);
    gradient[target] -= 1.0;
    LossResult { loss, gradient }
}

/// `log sum_i e^{z_i} - z_t`, with gradient `softmax(z) - onehot(t)`.
pub fn ce_loss(z: &LogitVector, target: usize) -> Result<LossResult> {
    z.check_target(target)?;
    let all: Vec<usize> = (0..z.dim()).collect();
    Ok(loss_on_support(z, target, &all))
}

/// Support set the sparse loss uses for `(z, t, k)` under `policy`.
pub fn loss_support(
    z: &LogitVector,
    target: usize,
    k: usize,
    policy: TargetPolicy,
) -> Result<SupportSet> {
    z.check_target(target)?;
    let support = top_k(z, k)?;
    Ok(match policy {
        TargetPolicy::ForceInclude => support.with_target(target),
        TargetPolicy::Literal => support,
    })
}

/// `log sum_{i in Omega_k} e^{z_i} - z_t`.
///
/// The gradient is `sparse_softmax(z, k)` on the support, minus one at the
/// target, and zero everywhere else.
pub fn sparse_ce_loss(
    z: &LogitVector,
    target: usize,
    k: usize,
    policy: TargetPolicy,
) -> Result<LossResult> {
    let support = loss_support(z, target, k, policy)?;
    Ok(loss_on_support(z, target, support.indices()))
}
