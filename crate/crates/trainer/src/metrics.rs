//! Single-label multiclass F1 scores.

use crate::dataset::Split;
use crate::error::{Result, TrainError};
use crate::model::Model;
use sparse_softmax::LogitVector;

/// Counts indexed `[reference][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_labels(n_classes: usize, labels: &[usize], predictions: &[usize]) -> Result<Self> {
        if labels.len() != predictions.len() {
            return Err(TrainError::InvalidConfig(format!(
                "{} labels but {} predictions",
                labels.len(),
                predictions.len()
            )));
        }
        let mut m = Self::new(n_classes);
        for (&l, &p) in labels.iter().zip(predictions) {
            m.record(l, p)?;
        }
        Ok(m)
    }

    pub fn record(&mut self, label: usize, prediction: usize) -> Result<()> {
        for c in [label, prediction] {
            if c >= self.n_classes {
                return Err(TrainError::LabelOutOfRange {
                    label: c,
                    n_classes: self.n_classes,
                });
            }
        }
        self.counts[label * self.n_classes + prediction] += 1;
        Ok(())
    }

    pub fn get(&self, label: usize, prediction: usize) -> u64 {
        self.counts[label * self.n_classes + prediction]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    /// Pooled F1. Every decision is one prediction against one reference, so
    /// pooled precision, recall and F1 all equal accuracy.
    pub fn micro_f1(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.correct() as f64 / total as f64
    }

    /// `2 TP / (2 TP + FP + FN)` for one class; zero when the class appears in
    /// neither references nor predictions.
    pub fn class_f1(&self, class: usize) -> f64 {
        let tp = self.get(class, class);
        let row: u64 = (0..self.n_classes).map(|p| self.get(class, p)).sum();
        let col: u64 = (0..self.n_classes).map(|l| self.get(l, class)).sum();
        let denom = row + col;
        if denom == 0 {
            0.0
        } else {
            2.0 * tp as f64 / denom as f64
        }
    }

    /// Unweighted mean of the per-class F1 over all classes.
    pub fn macro_f1(&self) -> f64 {
        let sum: f64 = (0..self.n_classes).map(|c| self.class_f1(c)).sum();
        sum / self.n_classes as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F1Scores {
    pub macro_f1: f64,
    pub micro_f1: f64,
}

pub fn f1_scores(n_classes: usize, labels: &[usize], predictions: &[usize]) -> Result<F1Scores> {
    if labels.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let m = ConfusionMatrix::from_labels(n_classes, labels, predictions)?;
    Ok(F1Scores {
        macro_f1: m.macro_f1(),
        micro_f1: m.micro_f1(),
    })
}

/// Argmax of each logit row, lowest index on ties.
pub fn predict(model: &Model, split: &Split) -> Result<Vec<usize>> {
    let logits = model.logits(split.features.view());
    logits
        .rows()
        .into_iter()
        .map(|row| Ok(LogitVector::new(row.to_vec())?.argmax()))
        .collect()
}

/// Macro and micro F1 of the model's argmax predictions on `split`.
pub fn evaluate(model: &Model, split: &Split) -> Result<F1Scores> {
    if split.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let predictions = predict(model, split)?;
    f1_scores(model.n_classes(), &split.labels, &predictions)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let labels = [0, 1, 2, 2, 1];
        let s = f1_scores(3, &labels, &labels).unwrap();
        assert_eq!(s, F1Scores { macro_f1: 1.0, micro_f1: 1.0 });
    }

    #[test]
    fn two_class_half_right() {
        let s = f1_scores(2, &[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(s.micro_f1, 0.5);
        assert_eq!(s.macro_f1, 0.5);
    }

    #[test]
    fn constant_predictor_on_balanced_three_class() {
        let labels = [0, 0, 0, 1, 1, 1, 2, 2, 2];
        let s = f1_scores(3, &labels, &[0; 9]).unwrap();
        assert!((s.micro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.macro_f1 - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn absent_classes_count_as_zero() {
        // Class 2 never occurs; macro averages over all three classes.
        let s = f1_scores(3, &[0, 1], &[0, 1]).unwrap();
        assert_eq!(s.micro_f1, 1.0);
        assert!((s.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(f1_scores(2, &[], &[]), Err(TrainError::EmptySplit)));
        assert!(f1_scores(2, &[0, 2], &[0, 1]).is_err());
        assert!(f1_scores(2, &[0], &[0, 1]).is_err());
    }
}
