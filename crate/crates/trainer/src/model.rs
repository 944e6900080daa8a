//! Linear and one-hidden-layer classifiers with hand-written backprop.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sparse_softmax::rng::trial_rng;

use crate::error::{Result, TrainError};

/// RNG stream used for parameter initialization.
const INIT_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModelConfig {
    #[default]
    Linear,
    /// One tanh hidden layer of the given width.
    Mlp { hidden: usize },
}

/// Affine map `x W^T + b`, weight shape `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Gaussian weights with standard deviation `1 / sqrt(fan_in)`, zero bias.
    fn init<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        let scale = 1.0 / (fan_in as f64).sqrt();
        let weight = Array2::from_shape_fn((fan_out, fan_in), |_| {
            let g: f64 = StandardNormal.sample(rng);
            scale * g
        });
        Self {
            weight,
            bias: Array1::zeros(fan_out),
        }
    }

    fn zeros_like(&self) -> Self {
        Self {
            weight: Array2::zeros(self.weight.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }

    fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    config: ModelConfig,
    /// One layer for a linear model, hidden then output for an MLP.
    layers: Vec<Dense>,
}

/// Gradients with the same layout as [`Model`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Activations kept from the forward pass for backprop.
pub struct ForwardCache {
    hidden: Option<Array2<f64>>,
}

impl Model {
    pub fn new(config: ModelConfig, feature_dim: usize, n_classes: usize, seed: u64) -> Result<Self> {
        if feature_dim == 0 || n_classes == 0 {
            return Err(TrainError::InvalidConfig(
                "model dimensions must be positive".into(),
            ));
        }
        let mut rng = trial_rng(seed, INIT_STREAM);
        let layers = match config {
            ModelConfig::Linear => vec![Dense::init(&mut rng, feature_dim, n_classes)],
            ModelConfig::Mlp { hidden } => {
                if hidden == 0 {
                    return Err(TrainError::InvalidConfig("hidden width must be positive".into()));
                }
                vec![
                    Dense::init(&mut rng, feature_dim, hidden),
                    Dense::init(&mut rng, hidden, n_classes),
                ]
            }
        };
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> ModelConfig {
        self.config
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.layers.last().expect("at least one layer").weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Logits, one row per input row.
    pub fn logits(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.forward(x).0
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> (Array2<f64>, ForwardCache) {
        match self.layers.as_slice() {
            [out] => (out.forward(x), ForwardCache { hidden: None }),
            [hid, out] => {
                let h = hid.forward(x).mapv(f64::tanh);
                let z = out.forward(h.view());
                (z, ForwardCache { hidden: Some(h) })
            }
            _ => unreachable!("models have one or two layers"),
        }
    }

    /// Parameter gradients given `d loss / d logits` for each row.
    pub fn backward(
        &self,
        x: ArrayView2<f64>,
        cache: &ForwardCache,
        grad_logits: ArrayView2<f64>,
    ) -> Gradients {
        let dense_grad = |input: ArrayView2<f64>, delta: ArrayView2<f64>| Dense {
            weight: delta.t().dot(&input),
            bias: delta.sum_axis(Axis(0)),
        };
        let layers = match (self.layers.as_slice(), &cache.hidden) {
            ([_], None) => vec![dense_grad(x, grad_logits)],
            ([_, out], Some(h)) => {
                let dh = grad_logits.dot(&out.weight);
                let da = dh * h.mapv(|v| 1.0 - v * v);
                vec![dense_grad(x, da.view()), dense_grad(h.view(), grad_logits)]
            }
            _ => unreachable!("cache matches model layout"),
        };
        Gradients { layers }
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    /// Mutable parameter buffers in a fixed order.
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

impl Gradients {
    /// Buffers in the same order as [`Model::param_slices_mut`].
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|&g| g == 0.0))
    }
}
