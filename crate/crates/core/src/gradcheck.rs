//! Central finite-difference checks for the loss gradients.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::logits::LogitVector;
use crate::loss::{ce_loss, sparse_ce_loss, TargetPolicy};
use crate::rng::trial_rng;
use crate::topk::top_k;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Minimum distance to a top-k switch for a sample to be compared.
pub const DEFAULT_MIN_GAP: f64 = 1e-3;

/// Gradient of `f` at `x` by central differences with step `h`.
pub fn central_difference<F>(f: F, x: &[f64], h: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let plus = f(&probe);
            probe[i] = x[i] - h;
            let minus = f(&probe);
            probe[i] = x[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vectors vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// True when no top-k membership switch lies within `min_gap` of `z` for the
/// sparse loss at `(t, k, policy)`.
pub fn is_fd_comparable(
    z: &LogitVector,
    target: usize,
    k: usize,
    policy: TargetPolicy,
    min_gap: f64,
) -> Result<bool> {
    z.check_target(target)?;
    let d = z.dim();
    let k_eff = k.min(d);
    if k_eff == 0 {
        return Err(CoreError::ZeroK);
    }
    if k_eff == d {
        return Ok(true);
    }
    let ranked = top_k(z, k_eff + 1)?;
    let order = ranked.ranked();
    let gap = |r: usize| z[order[r]] - z[order[r + 1]];
    if gap(k_eff - 1) < min_gap {
        return Ok(false);
    }
    let target_outside = !order[..k_eff].contains(&target);
    if policy.forces_target() && target_outside && k_eff >= 2 && gap(k_eff - 2) < min_gap {
        return Ok(false);
    }
    Ok(true)
}

/// Parameters of a randomized gradient check.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub dim: usize,
    /// Fixed k, or uniform over `1..=dim` per trial when `None`.
    pub k: Option<usize>,
    pub trials: usize,
    pub seed: u64,
    pub step: f64,
    pub min_gap: f64,
}

impl GradCheckConfig {
    pub fn new(dim: usize, k: Option<usize>, trials: usize, seed: u64) -> Self {
        Self {
            dim,
            k,
            trials,
            seed,
            step: DEFAULT_STEP,
            min_gap: DEFAULT_MIN_GAP,
        }
    }
}

/// Outcome of one compared sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckTrial {
    pub trial: usize,
    pub k: usize,
    pub target: usize,
    pub policy: TargetPolicy,
    pub ce_rel_error: f64,
    pub sparse_rel_error: f64,
    /// Samples rejected for lying too close to a top-k switch.
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub config: GradCheckConfig,
    pub trials: Vec<GradCheckTrial>,
}

impl GradCheckReport {
    pub fn max_ce_error(&self) -> f64 {
        self.trials.iter().map(|t| t.ce_rel_error).fold(0.0, f64::max)
    }

    pub fn max_sparse_error(&self) -> f64 {
        self.trials.iter().map(|t| t.sparse_rel_error).fold(0.0, f64::max)
    }

    pub fn max_error(&self) -> f64 {
        self.max_ce_error().max(self.max_sparse_error())
    }

    pub fn rejected(&self) -> usize {
        self.trials.iter().map(|t| t.rejected).sum()
    }
}

/// Random logits: standard normal scaled by a per-sample factor in [0.5, 3].
pub fn sample_logits<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> LogitVector {
    let scale = rng.random_range(0.5..3.0);
    let values = (0..dim)
        .map(|_| { let g: f64 = StandardNormal.sample(rng); scale * g })
        .collect::<Vec<f64>>();
    LogitVector::new(values).expect("normal samples are finite")
}

/// Checks both loss gradients against central differences at random points.
pub fn run_grad_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    if config.dim == 0 {
        return Err(CoreError::EmptyLogits);
    }
    if config.k == Some(0) {
        return Err(CoreError::ZeroK);
    }
    if config.trials == 0 {
        return Err(CoreError::NoTrials);
    }
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|trial| check_one(config, trial))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradCheckReport {
        config: config.clone(),
        trials,
    })
}

fn check_one(config: &GradCheckConfig, trial: usize) -> Result<GradCheckTrial> {
    let mut rng = trial_rng(config.seed, trial as u64);
    let mut rejected = 0;
    loop {
        let z = sample_logits(&mut rng, config.dim);
        let k = config.k.unwrap_or_else(|| rng.random_range(1..=config.dim));
        let target = rng.random_range(0..config.dim);
        let policy = TargetPolicy::from_flag(rng.random_bool(0.5));
        if !is_fd_comparable(&z, target, k, policy, config.min_gap)? {
            rejected += 1;
            continue;
        }

        let ce = ce_loss(&z, target)?;
        let ce_fd = central_difference(
            |x| ce_loss(&LogitVector::from_slice(x).unwrap(), target).unwrap().loss,
            z.as_slice(),
            config.step,
        );
        let sparse = sparse_ce_loss(&z, target, k, policy)?;
        let sparse_fd = central_difference(
            |x| {
                sparse_ce_loss(&LogitVector::from_slice(x).unwrap(), target, k, policy)
                    .unwrap()
                    .loss
            },
            z.as_slice(),
            config.step,
        );
        return Ok(GradCheckTrial {
            trial,
            k,
            target,
            policy,
            ce_rel_error: relative_error(&ce.gradient, &ce_fd),
            sparse_rel_error: relative_error(&sparse.gradient, &sparse_fd),
            rejected,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_of_quadratic() {
        let g = central_difference(|x| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-4);
        assert!((g[0] - 4.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn relative_error_edges() {
        assert_eq!(relative_error(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert_eq!(relative_error(&[1.0, 0.0], &[1.0, 0.0]), 0.0);
        assert!((relative_error(&[1.0], &[0.5]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn comparability_detects_boundary() {
        let z = LogitVector::from_slice(&[3.0, 2.0, 1.9995, 0.0]).unwrap();
        assert!(!is_fd_comparable(&z, 0, 2, TargetPolicy::Literal, 1e-3).unwrap());
        assert!(is_fd_comparable(&z, 0, 1, TargetPolicy::Literal, 1e-3).unwrap());
        assert!(is_fd_comparable(&z, 0, 4, TargetPolicy::Literal, 1e-3).unwrap());
        // Forced target at rank 4 evicts rank 3, which sits next to rank 2.
        assert!(!is_fd_comparable(&z, 3, 3, TargetPolicy::ForceInclude, 1e-3).unwrap());
        assert!(is_fd_comparable(&z, 3, 3, TargetPolicy::Literal, 1e-3).unwrap());
    }

    #[test]
    fn small_run_passes() {
        let report = run_grad_check(&GradCheckConfig::new(8, None, 50, 3)).unwrap();
        assert_eq!(report.trials.len(), 50);
        assert!(report.max_error() < 1e-5, "{}", report.max_error());
    }
}
