//! Softmax and top-k sparse-softmax.
//!
//! Both transforms share one masked kernel that iterates the support in
//! ascending index order, so `sparse_softmax(z, k)` with `k >= d` is
//! bit-identical to `softmax(z)`.

use crate::error::Result;
use crate::logits::LogitVector;
use crate::topk::{top_k, SupportSet};

/// A point on the probability simplex whose nonzero entries lie in `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution {
    values: Vec<f64>,
    support: Vec<usize>,
}

impl ProbabilityDistribution {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices allowed to be nonzero, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn nonzero_count(&self) -> usize {
        self.values.iter().filter(|&&p| p != 0.0).count()
    }

    /// Most probable category, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.values.iter().enumerate().skip(1) {
            if p > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Stable `exp(z_i - m) / sum_j exp(z_j - m)` over `support`; zero elsewhere.
pub(crate) fn masked_softmax(values: &[f64], support: &[usize]) -> Vec<f64> {
    let m = support
        .iter()
        .map(|&i| values[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; values.len()];
    let mut total = 0.0;
    for &i in support {
        let e = (values[i] - m).exp();
        out[i] = e;
        total += e;
    }
    for &i in support {
        out[i] /= total;
    }
    out
}

/// Stable `log sum_{i in support} exp(z_i)`, returned as `(m, r)` with the
/// value equal to `m + r`, `m` the support maximum.
///
/// The maximum contributes exactly 1 to the shifted sum, so the remainder
/// goes through `ln_1p`.
pub(crate) fn masked_log_sum_exp(values: &[f64], support: &[usize]) -> (f64, f64) {
    let mut arg = support[0];
    for &i in &support[1..] {
        if values[i] > values[arg] {
            arg = i;
        }
    }
    let m = values[arg];
    let rest: f64 = support
        .iter()
        .filter(|&&i| i != arg)
        .map(|&i| (values[i] - m).exp())
        .sum();
    (m, rest.ln_1p())
}

/// `log sum_i exp(z_i)` over all categories.
pub fn log_sum_exp(z: &LogitVector) -> f64 {
    let all: Vec<usize> = (0..z.dim()).collect();
    let (m, r) = masked_log_sum_exp(z.as_slice(), &all);
    m + r
}

/// Full-support softmax.
pub fn softmax(z: &LogitVector) -> ProbabilityDistribution {
    let support: Vec<usize> = (0..z.dim()).collect();
    let values = masked_softmax(z.as_slice(), &support);
    ProbabilityDistribution { values, support }
}

/// Softmax restricted to an explicit support set.
pub fn softmax_on(z: &LogitVector, support: &SupportSet) -> ProbabilityDistribution {
    let values = masked_softmax(z.as_slice(), support.indices());
    ProbabilityDistribution {
        values,
        support: support.indices().to_vec(),
    }
}

/// Softmax over the `k` largest logits; every other entry is exactly zero.
pub fn sparse_softmax(z: &LogitVector, k: usize) -> Result<ProbabilityDistribution> {
    let support = top_k(z, k)?;
    Ok(softmax_on(z, &support))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CoreError;

    fn z(v: &[f64]) -> LogitVector {
        LogitVector::from_slice(v).unwrap()
    }

    // Unshifted textbook evaluation; only valid for small logits.
    fn naive_softmax(v: &[f64]) -> Vec<f64> {
        let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
        let s: f64 = e.iter().rev().sum();
        e.iter().map(|x| x / s).collect()
    }

    #[test]
    fn uniform_cases() {
        assert_eq!(softmax(&z(&[0.0, 0.0])).values(), &[0.5, 0.5]);
        let p = softmax(&z(&[1000.0, 1000.0, 1000.0]));
        for &v in p.values() {
            assert!((v - 1.0 / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn matches_extended_precision_values() {
        // 40-digit evaluation of exp(z_i) / sum_j exp(z_j).
        let want = [
            0.090030573170380457998,
            0.24472847105479765247,
            0.66524095577482188953,
        ];
        let p = softmax(&z(&[1.0, 2.0, 3.0]));
        let naive = naive_softmax(&[1.0, 2.0, 3.0]);
        for i in 0..3 {
            assert!((p.values()[i] - want[i]).abs() < 3e-16);
            assert!((naive[i] - want[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn sparse_cases() {
        let full = softmax(&z(&[1.0, 2.0, 3.0]));
        assert_eq!(sparse_softmax(&z(&[1.0, 2.0, 3.0]), 3).unwrap(), full);
        assert_eq!(
            sparse_softmax(&z(&[1.0, 2.0, 3.0]), 1).unwrap().values(),
            &[0.0, 0.0, 1.0]
        );
        let p = sparse_softmax(&z(&[1.0, 2.0, 3.0]), 2).unwrap();
        let sub = naive_softmax(&[2.0, 3.0]);
        assert_eq!(p.values()[0].to_bits(), 0);
        assert!((p.values()[1] - 0.26894142136999512075).abs() < 1e-16);
        assert!((p.values()[2] - 0.73105857863000487925).abs() < 1e-16);
        assert!((p.values()[1] - sub[0]).abs() < 1e-15);
        assert_eq!(p.support(), &[1, 2]);
        assert_eq!(
            sparse_softmax(&z(&[1.0]), 0),
            Err(CoreError::ZeroK)
        );
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = z(&[1000.0, 1000.0]);
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = z(&[-1000.0]);
        assert_eq!(log_sum_exp(&v), -1000.0);
    }
}
