//! Top-k support selection.
//!
//! Ranking is by logit descending, then by index ascending, so equal logits
//! always resolve to the lowest index and the selected set is a pure function
//! of the logit values.

use std::cmp::Ordering;

use crate::error::{CoreError, Result};
use crate::logits::LogitVector;

/// The top-k index set of a logit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    /// Members in ascending index order.
    indices: Vec<usize>,
    /// Members in rank order (largest logit first).
    ranked: Vec<usize>,
    k_requested: usize,
    dim: usize,
    /// Set when a target was substituted in; holds the evicted index.
    evicted: Option<usize>,
}

fn rank_order(values: &[f64], a: usize, b: usize) -> Ordering {
    // Logits are finite, so partial_cmp never fails; -0.0 and 0.0 tie.
    values[b]
        .partial_cmp(&values[a])
        .unwrap_or(Ordering::Equal)
        .then(a.cmp(&b))
}

/// Indices of the `k` largest entries of `z`, with `k` clamped to `d`.
pub fn top_k(z: &LogitVector, k: usize) -> Result<SupportSet> {
    if k == 0 {
        return Err(CoreError::ZeroK);
    }
    let values = z.as_slice();
    let dim = values.len();
    let k_eff = k.min(dim);

    let mut order: Vec<usize> = (0..dim).collect();
    if k_eff < dim {
        order.select_nth_unstable_by(k_eff - 1, |&a, &b| rank_order(values, a, b));
        order.truncate(k_eff);
    }
    order.sort_unstable_by(|&a, &b| rank_order(values, a, b));

    let mut indices = order.clone();
    indices.sort_unstable();
    Ok(SupportSet {
        indices,
        ranked: order,
        k_requested: k,
        dim,
        evicted: None,
    })
}

impl SupportSet {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn ranked(&self) -> &[usize] {
        &self.ranked
    }

    pub fn k_requested(&self) -> usize {
        self.k_requested
    }

    /// `min(k, d)`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when the set covers every category.
    pub fn is_full(&self) -> bool {
        self.indices.len() == self.dim
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Index evicted by [`SupportSet::with_target`], if a substitution happened.
    pub fn evicted(&self) -> Option<usize> {
        self.evicted
    }

    /// Lowest-ranked member.
    pub fn last_ranked(&self) -> usize {
        *self.ranked.last().expect("support set is never empty")
    }

    /// The set with `target` substituted for the lowest-ranked member when the
    /// target is not already selected.
    pub fn with_target(&self, target: usize) -> SupportSet {
        if self.contains(target) {
            return self.clone();
        }
        let mut ranked = self.ranked.clone();
        let evicted = ranked.pop();
        ranked.push(target);
        let mut indices = ranked.clone();
        indices.sort_unstable();
        SupportSet {
            indices,
            ranked,
            k_requested: self.k_requested,
            dim: self.dim,
            evicted,
        }
    }
}
