use std::ops::Index;

use crate::error::{CoreError, Result};

/// Raw real-valued scores over `d >= 1` categories. Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector {
    values: Vec<f64>,
}

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(CoreError::EmptyLogits);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(CoreError::NonFiniteLogit { index, value });
        }
        Ok(Self { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    /// Number of categories `d`.
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    /// Largest logit. Ties resolve to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.values[self.argmax()]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `max - min`, the logit spread.
    pub fn spread(&self) -> f64 {
        self.max() - self.min()
    }

    /// Copy of the vector with `c` added to every entry.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v + c).collect())
    }

    /// Sub-vector at `indices`, in the given order.
    pub fn gather(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.values[i]).collect())
    }

    pub(crate) fn check_target(&self, target: usize) -> Result<()> {
        if target >= self.dim() {
            return Err(CoreError::TargetOutOfRange {
                target,
                dim: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for LogitVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = CoreError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl AsRef<[f64]> for LogitVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}
