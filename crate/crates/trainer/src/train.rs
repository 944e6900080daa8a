//! Mini-batch training with the softmax or sparse-softmax cross-entropy.

use std::time::Instant;

use ndarray::Array2;
use rand::seq::SliceRandom;
use sparse_softmax::rng::trial_rng;
use sparse_softmax::{ce_loss, sparse_ce_loss, LogitVector, TargetPolicy};

use crate::dataset::SyntheticDataset;
use crate::error::{Result, TrainError};
use crate::metrics::evaluate;
use crate::model::Model;
use crate::optim::{Optimizer, OptimizerConfig};

/// RNG stream used for per-epoch shuffling.
const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Softmax,
    Sparse { k: usize },
}

impl LossKind {
    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Softmax => "softmax",
            LossKind::Sparse { .. } => "sparse",
        }
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            LossKind::Softmax => None,
            LossKind::Sparse { k } => Some(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub target_policy: TargetPolicy,
    /// Write elapsed seconds into each record; zero when off.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Softmax,
            epochs: 20,
            batch_size: 256,
            optimizer: OptimizerConfig::default(),
            seed: 7,
            target_policy: TargetPolicy::Literal,
            record_wall_time: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(TrainError::InvalidConfig(
                "epochs and batch size must be positive".into(),
            ));
        }
        if self.loss.k() == Some(0) {
            return Err(TrainError::InvalidConfig("k must be at least 1".into()));
        }
        self.optimizer.validate()
    }

    pub fn with_loss(mut self, loss: LossKind) -> Self {
        self.loss = loss;
        self
    }
}

/// One row of a loss curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean over batches of the batch-mean training loss.
    pub mean_train_loss: f64,
    /// Same average of the full softmax cross-entropy at the same model
    /// states; equals `mean_train_loss` for softmax runs.
    pub mean_softmax_loss: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    /// Epoch during which training stopped.
    pub epoch: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    /// Completed epochs only; never contains non-finite losses.
    pub records: Vec<ExperimentRecord>,
    pub divergence: Option<Divergence>,
    /// False when every parameter gradient was exactly zero for the whole run.
    pub received_gradient: bool,
}

impl TrainOutcome {
    pub fn diverged(&self) -> bool {
        self.divergence.is_some()
    }

    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.mean_train_loss)
    }
}

struct BatchLoss {
    loss: f64,
    softmax_loss: f64,
    grad_logits: Array2<f64>,
}

fn batch_loss(
    logits: &Array2<f64>,
    labels: &[usize],
    loss: LossKind,
    policy: TargetPolicy,
) -> std::result::Result<BatchLoss, String> {
    let (rows, classes) = logits.dim();
    let scale = 1.0 / rows as f64;
    let mut grad_logits = Array2::zeros((rows, classes));
    let mut total = 0.0;
    let mut softmax_total = 0.0;
    for (r, row) in logits.rows().into_iter().enumerate() {
        let z = LogitVector::new(row.to_vec()).map_err(|e| format!("row {r}: {e}"))?;
        let target = labels[r];
        let full = ce_loss(&z, target).map_err(|e| e.to_string())?;
        let result = match loss {
            LossKind::Softmax => full.clone(),
            LossKind::Sparse { k } => {
                sparse_ce_loss(&z, target, k, policy).map_err(|e| e.to_string())?
            }
        };
        total += result.loss;
        softmax_total += full.loss;
        for (g, d) in grad_logits.row_mut(r).iter_mut().zip(&result.gradient) {
            *g = d * scale;
        }
    }
    Ok(BatchLoss {
        loss: total * scale,
        softmax_loss: softmax_total * scale,
        grad_logits,
    })
}

/// Trains `model` on the training split. Identical inputs produce identical
/// records and parameters.
pub fn train(mut model: Model, data: &SyntheticDataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if model.n_classes() != data.n_classes() {
        return Err(TrainError::ClassCountMismatch {
            model: model.n_classes(),
            data: data.n_classes(),
        });
    }
    if model.feature_dim() != data.feature_dim() {
        return Err(TrainError::FeatureDimMismatch {
            model: model.feature_dim(),
            data: data.feature_dim(),
        });
    }
    let train_split = &data.train;
    if train_split.is_empty() {
        return Err(TrainError::EmptySplit);
    }
    let eval_split = data.eval_split();

    let start = Instant::now();
    let mut optimizer = Optimizer::new(config.optimizer);
    let mut rng = trial_rng(config.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train_split.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    let mut received_gradient = false;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut softmax_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch = train_split.select(chunk);
            let (logits, cache) = model.forward(batch.features.view());
            let bl = match batch_loss(&logits, &batch.labels, config.loss, config.target_policy) {
                Ok(bl) => bl,
                Err(reason) => {
                    return Ok(TrainOutcome {
                        model,
                        records,
                        divergence: Some(Divergence { epoch, reason }),
                        received_gradient,
                    })
                }
            };
            loss_sum += bl.loss;
            softmax_sum += bl.softmax_loss;
            batches += 1;

            let grads = model.backward(batch.features.view(), &cache, bl.grad_logits.view());
            received_gradient |= !grads.is_zero();
            optimizer.step(&mut model.param_slices_mut(), &grads.slices());
        }

        let mean_train_loss = loss_sum / batches as f64;
        let mean_softmax_loss = softmax_sum / batches as f64;
        if !mean_train_loss.is_finite() || !mean_softmax_loss.is_finite() {
            return Ok(TrainOutcome {
                model,
                records,
                divergence: Some(Divergence {
                    epoch,
                    reason: format!("mean training loss is {mean_train_loss}"),
                }),
                received_gradient,
            });
        }
        let scores = match evaluate(&model, eval_split) {
            Ok(s) => s,
            Err(TrainError::Core(e)) => {
                return Ok(TrainOutcome {
                    model,
                    records,
                    divergence: Some(Divergence {
                        epoch,
                        reason: format!("evaluation: {e}"),
                    }),
                    received_gradient,
                })
            }
            Err(e) => return Err(e),
        };
        records.push(ExperimentRecord {
            epoch,
            mean_train_loss,
            mean_softmax_loss,
            macro_f1: scores.macro_f1,
            micro_f1: scores.micro_f1,
            wall_time_s: if config.record_wall_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
    }

    Ok(TrainOutcome {
        model,
        records,
        divergence: None,
        received_gradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_dataset, DatasetParams};
    use crate::model::ModelConfig;

    fn data(n_classes: usize, noise: f64) -> SyntheticDataset {
        generate_dataset(DatasetParams {
            n_classes,
            feature_dim: 8,
            samples_per_class: 10,
            noise_scale: noise,
            seed: 3,
        })
        .unwrap()
    }

    fn quick(loss: LossKind) -> TrainConfig {
        TrainConfig {
            loss,
            epochs: 5,
            batch_size: 8,
            record_wall_time: false,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn rejects_mismatched_model() {
        let d = data(5, 1.0);
        let m = Model::new(ModelConfig::Linear, 8, 4, 0).unwrap();
        assert!(matches!(
            train(m, &d, &quick(LossKind::Softmax)),
            Err(TrainError::ClassCountMismatch { model: 4, data: 5 })
        ));
        let m = Model::new(ModelConfig::Linear, 9, 5, 0).unwrap();
        assert!(train(m, &d, &quick(LossKind::Softmax)).is_err());
    }

    #[test]
    fn rejects_invalid_config() {
        let d = data(5, 1.0);
        let m = Model::new(ModelConfig::Linear, 8, 5, 0).unwrap();
        let mut c = quick(LossKind::Sparse { k: 0 });
        assert!(train(m.clone(), &d, &c).is_err());
        c.loss = LossKind::Softmax;
        c.epochs = 0;
        assert!(train(m, &d, &c).is_err());
    }

    #[test]
    fn one_record_per_epoch() {
        let d = data(5, 1.0);
        let m = Model::new(ModelConfig::Mlp { hidden: 6 }, 8, 5, 0).unwrap();
        let out = train(m, &d, &quick(LossKind::Sparse { k: 2 })).unwrap();
        assert_eq!(out.records.len(), 5);
        assert!(out.records.iter().enumerate().all(|(i, r)| r.epoch == i + 1));
        assert!(!out.diverged());
        for r in &out.records {
            assert!(r.mean_train_loss <= r.mean_softmax_loss + 1e-12);
            assert!((0.0..=1.0).contains(&r.macro_f1) && (0.0..=1.0).contains(&r.micro_f1));
            assert_eq!(r.wall_time_s, 0.0);
        }
    }

    #[test]
    fn huge_learning_rate_is_reported_as_divergence() {
        let d = data(5, 1.0);
        let m = Model::new(ModelConfig::Linear, 8, 5, 0).unwrap();
        let mut c = quick(LossKind::Softmax);
        c.optimizer = OptimizerConfig::sgd(1e308);
        c.epochs = 50;
        let out = train(m, &d, &c).unwrap();
        let div = out.divergence.expect("must diverge");
        assert_eq!(out.records.len(), div.epoch - 1);
        assert!(out.records.iter().all(|r| r.mean_train_loss.is_finite()));
    }
}
