//! Softmax, top-k sparse-softmax, their cross-entropy losses with exact
//! gradients, and the logit-margin analysis of those losses.
//!
//! ```
//! use sparse_softmax::{sparse_softmax, LogitVector};
//!
//! let z = LogitVector::new(vec![1.0, 2.0, 3.0]).unwrap();
//! let p = sparse_softmax(&z, 2).unwrap();
//! assert_eq!(p.values()[0], 0.0);
//! assert!((p.sum() - 1.0).abs() < 1e-12);
//! ```

pub mod analysis;
pub mod error;
pub mod gradcheck;
pub mod logits;
pub mod loss;
pub mod rng;
pub mod topk;
pub mod transform;

pub use error::{CoreError, Result};
pub use logits::LogitVector;
pub use loss::{ce_loss, loss_support, sparse_ce_loss, LossResult, TargetPolicy};
pub use topk::{top_k, SupportSet};
pub use transform::{log_sum_exp, softmax, softmax_on, sparse_softmax, ProbabilityDistribution};
