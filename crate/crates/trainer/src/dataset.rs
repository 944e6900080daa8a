//! Gaussian-mixture classification data.

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_softmax::rng::trial_rng;

use crate::error::{Result, TrainError};

/// RNG stream used for dataset generation.
const DATA_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetParams {
    pub n_classes: usize,
    pub feature_dim: usize,
    pub samples_per_class: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl DatasetParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(TrainError::InvalidConfig(format!(
                "n_classes must be at least 2, got {}",
                self.n_classes
            )));
        }
        if self.feature_dim == 0 || self.samples_per_class == 0 {
            return Err(TrainError::InvalidConfig(
                "feature_dim and samples_per_class must be positive".into(),
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(TrainError::InvalidConfig(format!(
                "noise_scale must be a nonnegative number, got {}",
                self.noise_scale
            )));
        }
        Ok(())
    }

    /// Per-class `(train, dev, test)` counts of the 8:1:1 split.
    pub fn split_counts(&self) -> (usize, usize, usize) {
        let held_out = self.samples_per_class / 10;
        (self.samples_per_class - 2 * held_out, held_out, held_out)
    }
}

/// Feature rows and their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, rows: &[usize]) -> Split {
        Split {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub params: DatasetParams,
    pub train: Split,
    pub dev: Split,
    pub test: Split,
}

impl SyntheticDataset {
    pub fn n_classes(&self) -> usize {
        self.params.n_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.params.feature_dim
    }

    pub fn seed(&self) -> u64 {
        self.params.seed
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.dev.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Split used for per-epoch scores: dev, or train when dev is empty.
    pub fn eval_split(&self) -> &Split {
        if self.dev.is_empty() {
            &self.train
        } else {
            &self.dev
        }
    }

    /// Split used for final scores: test, then dev, then train.
    pub fn final_split(&self) -> &Split {
        if !self.test.is_empty() {
            &self.test
        } else {
            self.eval_split()
        }
    }
}

/// Draws one standard-normal centroid per class, then `samples_per_class`
/// points per class at `centroid + noise_scale * N(0, I)`, split 8:1:1 within
/// each class. Rows are class-major within each split.
pub fn generate_dataset(params: DatasetParams) -> Result<SyntheticDataset> {
    params.validate()?;
    let DatasetParams {
        n_classes,
        feature_dim,
        samples_per_class,
        noise_scale,
        seed,
    } = params;
    let mut rng = trial_rng(seed, DATA_STREAM);
    let centroids = Array2::from_shape_fn((n_classes, feature_dim), |_| normal(&mut rng));

    let (n_train, n_dev, n_test) = params.split_counts();
    let mut train = SplitBuilder::new(n_classes * n_train, feature_dim);
    let mut dev = SplitBuilder::new(n_classes * n_dev, feature_dim);
    let mut test = SplitBuilder::new(n_classes * n_test, feature_dim);
    let mut point = vec![0.0; feature_dim];
    for class in 0..n_classes {
        let centroid = centroids.row(class);
        for s in 0..samples_per_class {
            for (x, &c) in point.iter_mut().zip(centroid.iter()) {
                *x = c + noise_scale * normal(&mut rng);
            }
            let target = if s < n_train {
                &mut train
            } else if s < n_train + n_dev {
                &mut dev
            } else {
                &mut test
            };
            target.push(class, &point);
        }
    }
    Ok(SyntheticDataset {
        params,
        train: train.finish(),
        dev: dev.finish(),
        test: test.finish(),
    })
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub(crate) struct SplitBuilder {
    data: Vec<f64>,
    labels: Vec<usize>,
    feature_dim: usize,
}

impl SplitBuilder {
    pub(crate) fn new(rows: usize, feature_dim: usize) -> Self {
        Self {
            data: Vec::with_capacity(rows * feature_dim),
            labels: Vec::with_capacity(rows),
            feature_dim,
        }
    }

    pub(crate) fn push(&mut self, label: usize, features: &[f64]) {
        self.labels.push(label);
        self.data.extend_from_slice(features);
    }

    pub(crate) fn finish(self) -> Split {
        let rows = self.labels.len();
        Split {
            features: Array2::from_shape_vec((rows, self.feature_dim), self.data)
                .expect("row lengths match feature_dim"),
            labels: self.labels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(spc: usize, noise: f64) -> DatasetParams {
        DatasetParams {
            n_classes: 150,
            feature_dim: 64,
            samples_per_class: spc,
            noise_scale: noise,
            seed: 7,
        }
    }

    #[test]
    fn split_sizes() {
        let d = generate_dataset(params(40, 1.0)).unwrap();
        assert_eq!(d.len(), 6000);
        assert_eq!((d.train.len(), d.dev.len(), d.test.len()), (4800, 600, 600));
        for split in [&d.train, &d.dev, &d.test] {
            let mut seen = vec![0usize; 150];
            for &l in &split.labels {
                seen[l] += 1;
            }
            assert!(seen.iter().all(|&c| c == split.len() / 150));
        }
    }

    #[test]
    fn tiny_classes_keep_a_training_sample() {
        let d = generate_dataset(params(1, 1.0)).unwrap();
        assert_eq!(d.train.len(), 150);
        assert!(d.dev.is_empty() && d.test.is_empty());
        assert_eq!(d.final_split().len(), 150);
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_dataset(params(5, 0.5)).unwrap();
        let b = generate_dataset(params(5, 0.5)).unwrap();
        assert_eq!(a, b);
        let mut p = params(5, 0.5);
        p.seed = 8;
        assert_ne!(a, generate_dataset(p).unwrap());
    }

    #[test]
    fn zero_noise_collapses_classes_to_points() {
        let d = generate_dataset(params(10, 0.0)).unwrap();
        let first = d.train.features.row(0).to_owned();
        for r in 1..8 {
            assert_eq!(d.train.features.row(r), first);
        }
        assert_ne!(d.train.features.row(8), first);
    }

    #[test]
    fn rejects_bad_params() {
        let mut p = params(10, 1.0);
        p.n_classes = 1;
        assert!(generate_dataset(p).is_err());
        let mut p = params(10, -1.0);
        p.noise_scale = -1.0;
        assert!(generate_dataset(p).is_err());
    }
}
