//! Margin analysis of the cross-entropy loss.
//!
//! For a correctly classified sample (`z_t = z_max`), the cross-entropy is
//! bounded below by `log(1 + (n - 1) e^{z_min - z_max})`. A loss ceiling
//! `epsilon` is therefore only reachable when the logit spread satisfies
//!
//! ```text
//! z_max - z_min >= log(n - 1) - log(e^epsilon - 1)
//! ```
//!
//! For `epsilon = log 2` the second term vanishes and the spread must reach
//! `log(n - 1)`. The sparse loss only sums over the top-k logits, so the same
//! argument holds with `n` replaced by `k` and the spread taken over the
//! support.
//!
//! [`verify_necessary_condition`] checks the contrapositive on random and
//! constructed near-boundary logit vectors.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::logits::LogitVector;
use crate::loss::{ce_loss, sparse_ce_loss, TargetPolicy};
use crate::rng::trial_rng;
use crate::topk::top_k;

/// Slack allowed on the spread inequality for accumulated rounding.
pub const SPREAD_TOLERANCE: f64 = 1e-9;

/// `log 2`, the loss ceiling of the worked example.
pub const LOG_2: f64 = std::f64::consts::LN_2;

/// Minimum logit spread `z_max - z_min` needed for a loss `<= epsilon` over
/// `n` categories. Negative results mean the bound is vacuous.
pub fn required_spread(epsilon: f64, n: usize) -> Result<f64> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(CoreError::InvalidEpsilon(epsilon));
    }
    if n < 2 {
        return Err(CoreError::TooFewCategories(n));
    }
    Ok(((n - 1) as f64).ln() - epsilon.exp_m1().ln())
}

/// Spread bound for a support of `k` logits. A single-logit support has
/// loss exactly zero once the target is selected, so its bound is zero.
pub fn required_support_spread(epsilon: f64, k: usize) -> Result<f64> {
    match k {
        0 => Err(CoreError::ZeroK),
        1 => {
            required_spread(epsilon, 2)?;
            Ok(0.0)
        }
        _ => required_spread(epsilon, k),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginBound {
    pub epsilon: f64,
    pub n: usize,
    pub required_spread: f64,
}

impl MarginBound {
    pub fn new(epsilon: f64, n: usize) -> Result<Self> {
        Ok(Self {
            epsilon,
            n,
            required_spread: required_spread(epsilon, n)?,
        })
    }
}

/// Which loss a verification run exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginLoss {
    Full,
    /// Sparse loss over the top `k` logits.
    Sparse { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub loss: MarginLoss,
}

impl VerifyConfig {
    pub fn new(n: usize, epsilon: f64, trials: usize, seed: u64) -> Self {
        Self {
            n,
            epsilon,
            trials,
            seed,
            loss: MarginLoss::Full,
        }
    }

    pub fn sparse(mut self, k: usize) -> Self {
        self.loss = MarginLoss::Sparse { k };
        self
    }

    /// Number of logits the bound is taken over.
    pub fn support_size(&self) -> usize {
        match self.loss {
            MarginLoss::Full => self.n,
            MarginLoss::Sparse { k } => k.min(self.n),
        }
    }
}

/// Sampling family of a verification trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFamily {
    Uniform1,
    Uniform10,
    Gaussian1,
    Gaussian5,
    NearBoundary,
    DominantTarget,
}

impl SampleFamily {
    pub const ALL: [SampleFamily; 6] = [
        SampleFamily::Uniform1,
        SampleFamily::Uniform10,
        SampleFamily::Gaussian1,
        SampleFamily::Gaussian5,
        SampleFamily::NearBoundary,
        SampleFamily::DominantTarget,
    ];

    pub fn for_trial(trial: usize) -> Self {
        Self::ALL[trial % Self::ALL.len()]
    }
}

/// Offsets from the bound used for near-boundary vectors.
const BOUNDARY_OFFSETS: [f64; 9] = [-0.5, -1e-3, -1e-6, -2e-9, 0.0, 2e-9, 1e-6, 1e-3, 0.5];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub family: SampleFamily,
    pub spread: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub config: VerifyConfig,
    pub bound: f64,
    pub counterexamples: usize,
    /// Samples whose loss was within the ceiling.
    pub passing: usize,
    pub min_passing_spread: Option<f64>,
    pub first_counterexample: Option<Counterexample>,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.counterexamples == 0
    }

    pub const CSV_HEADER: &'static str =
        "n,epsilon,trials,counterexamples,min_passing_spread,bound";

    pub fn csv_row(&self) -> String {
        let min = self
            .min_passing_spread
            .map(|s| s.to_string())
            .unwrap_or_default();
        format!(
            "{},{},{},{},{},{}",
            self.config.n,
            self.config.epsilon,
            self.config.trials,
            self.counterexamples,
            min,
            self.bound
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let loss = match self.config.loss {
            MarginLoss::Full => "cross-entropy".to_string(),
            MarginLoss::Sparse { k } => format!("sparse cross-entropy (k = {k})"),
        };
        let _ = writeln!(s, "margin bound verification: {loss}");
        let _ = writeln!(s, "  n               = {}", self.config.n);
        let _ = writeln!(s, "  epsilon         = {}", self.config.epsilon);
        let _ = writeln!(s, "  trials          = {}", self.config.trials);
        let _ = writeln!(s, "  seed            = {}", self.config.seed);
        let _ = writeln!(s, "  required spread = {}", self.bound);
        let _ = writeln!(s, "  passing samples = {}", self.passing);
        match self.min_passing_spread {
            Some(m) => {
                let _ = writeln!(s, "  min passing spread = {m}");
            }
            None => {
                let _ = writeln!(s, "  min passing spread = (none)");
            }
        }
        let _ = writeln!(s, "  counterexamples = {}", self.counterexamples);
        if let Some(c) = &self.first_counterexample {
            let _ = writeln!(
                s,
                "  first counterexample: trial {} ({:?}) spread {} loss {}",
                c.trial, c.family, c.spread, c.loss
            );
        }
        s
    }
}

/// One sampled vector: its target (the argmax) and family.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginSample {
    pub z: LogitVector,
    pub family: SampleFamily,
}

/// Draws the logit vector of `trial`. Deterministic in `(seed, trial)`.
pub fn sample_trial(config: &VerifyConfig, bound: f64, trial: usize) -> MarginSample {
    let mut rng = trial_rng(config.seed, trial as u64);
    let family = SampleFamily::for_trial(trial);
    let n = config.n;
    let values: Vec<f64> = match family {
        SampleFamily::Uniform1 => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        SampleFamily::Uniform10 => (0..n).map(|_| rng.random_range(-10.0..=10.0)).collect(),
        SampleFamily::Gaussian1 => gaussian(&mut rng, n, 1.0),
        SampleFamily::Gaussian5 => gaussian(&mut rng, n, 5.0),
        SampleFamily::NearBoundary => {
            near_boundary(&mut rng, n, config.support_size(), bound)
        }
        SampleFamily::DominantTarget => {
            let mut v = gaussian(&mut rng, n, 1.0);
            let top = argmax(&v);
            v[top] += rng.random_range(0.0..=(bound.max(0.0) + 5.0));
            v
        }
    };
    MarginSample {
        z: LogitVector::new(values).expect("sampled logits are finite"),
        family,
    }
}

fn gaussian<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| { let g: f64 = StandardNormal.sample(rng); scale * g })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Target at a random level `c`, `support - 1` entries pinned at
/// `c - (bound + offset)`, and anything outside the support strictly lower.
fn near_boundary<R: Rng>(rng: &mut R, n: usize, support: usize, bound: f64) -> Vec<f64> {
    let c = rng.random_range(-5.0..=5.0);
    let offset = BOUNDARY_OFFSETS[rng.random_range(0..BOUNDARY_OFFSETS.len())];
    let spread = (bound + offset).max(0.0);
    let low = c - spread;
    let mut positions: Vec<usize> = (0..n).collect();
    // Partial Fisher-Yates: the first `support` positions form the support,
    // the first of those holds the target.
    for i in 0..support.min(n) {
        let j = rng.random_range(i..n);
        positions.swap(i, j);
    }
    let mut v = vec![0.0; n];
    for (rank, &pos) in positions.iter().enumerate() {
        v[pos] = if rank == 0 {
            c
        } else if rank < support {
            low
        } else {
            low - 1.0 - rng.random_range(0.0..=3.0)
        };
    }
    v
}

struct TrialOutcome {
    trial: usize,
    family: SampleFamily,
    loss: f64,
    spread: f64,
}

fn evaluate_trial(config: &VerifyConfig, bound: f64, trial: usize) -> Result<TrialOutcome> {
    let MarginSample { z, family } = sample_trial(config, bound, trial);
    let target = z.argmax();
    let (loss, spread) = match config.loss {
        MarginLoss::Full => (ce_loss(&z, target)?.loss, z.spread()),
        MarginLoss::Sparse { k } => {
            let support = top_k(&z, k)?;
            let sub = z.gather(support.indices())?;
            let loss = sparse_ce_loss(&z, target, k, TargetPolicy::Literal)?.loss;
            (loss, sub.spread())
        }
    };
    Ok(TrialOutcome {
        trial,
        family,
        loss,
        spread,
    })
}

/// Checks, over `trials` seeded samples with target = argmax, that every
/// sample reaching loss `<= epsilon` has spread at least the required bound
/// (within [`SPREAD_TOLERANCE`]).
pub fn verify_necessary_condition(config: &VerifyConfig) -> Result<VerificationReport> {
    if config.trials == 0 {
        return Err(CoreError::NoTrials);
    }
    let bound = match config.loss {
        MarginLoss::Full => required_spread(config.epsilon, config.n)?,
        MarginLoss::Sparse { k } => {
            if config.n < 2 {
                return Err(CoreError::TooFewCategories(config.n));
            }
            required_support_spread(config.epsilon, k.min(config.n))?
        }
    };

    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|trial| evaluate_trial(config, bound, trial))
        .collect::<Result<Vec<_>>>()?;

    let mut report = VerificationReport {
        config: config.clone(),
        bound,
        counterexamples: 0,
        passing: 0,
        min_passing_spread: None,
        first_counterexample: None,
    };
    for o in outcomes {
        if o.loss > config.epsilon {
            continue;
        }
        report.passing += 1;
        report.min_passing_spread = Some(match report.min_passing_spread {
            Some(m) => m.min(o.spread),
            None => o.spread,
        });
        if o.spread < bound - SPREAD_TOLERANCE {
            report.counterexamples += 1;
            if report.first_counterexample.is_none() {
                report.first_counterexample = Some(Counterexample {
                    trial: o.trial,
                    family: o.family,
                    spread: o.spread,
                    loss: o.loss,
                });
            }
        }
    }
    Ok(report)
}

/// A logit vector whose top-k spread clears the sparse bound by `margin`
/// while every other logit sits at the support minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastExample {
    pub z: LogitVector,
    pub target: usize,
    pub k: usize,
    pub sparse_loss: f64,
    pub full_loss: f64,
    pub sparse_bound: f64,
    pub full_bound: f64,
}

/// Builds the sparse-vs-full contrast at loss ceiling `log 2`.
///
/// The target is logit 0 at index 0 and all other logits equal
/// `-(sparse_bound + margin)`. Ties resolve to the lowest indices, so the
/// support is `{0, .., k - 1}`.
pub fn sparse_contrast(n: usize, k: usize, margin: f64) -> Result<ContrastExample> {
    let sparse_bound = required_support_spread(LOG_2, k.min(n))?;
    let full_bound = required_spread(LOG_2, n)?;
    let mut values = vec![-(sparse_bound + margin); n];
    values[0] = 0.0;
    let z = LogitVector::new(values)?;
    Ok(ContrastExample {
        sparse_loss: sparse_ce_loss(&z, 0, k, TargetPolicy::Literal)?.loss,
        full_loss: ce_loss(&z, 0)?.loss,
        z,
        target: 0,
        k,
        sparse_bound,
        full_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_two_ceiling_reduces_to_log_n_minus_one() {
        let s = required_spread(LOG_2, 101).unwrap();
        assert!((s - 100f64.ln()).abs() < 1e-12);
        assert!((s - 4.605170185988091368).abs() < 1e-12);
        assert_eq!(required_spread(LOG_2, 2).unwrap(), 0.0);
    }

    #[test]
    fn small_epsilon_value() {
        // 40-digit evaluation of log(999) - log(e^0.1 - 1) at the binary 0.1.
        let s = required_spread(0.1, 1000).unwrap();
        assert!((s - 9.1589232396926442691).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(required_spread(0.0, 10), Err(CoreError::InvalidEpsilon(0.0)));
        assert_eq!(required_spread(-1.0, 10), Err(CoreError::InvalidEpsilon(-1.0)));
        assert!(required_spread(f64::NAN, 10).is_err());
        assert_eq!(required_spread(0.5, 1), Err(CoreError::TooFewCategories(1)));
        assert_eq!(required_support_spread(0.5, 0), Err(CoreError::ZeroK));
        assert_eq!(required_support_spread(0.5, 1), Ok(0.0));
    }

    #[test]
    fn vacuous_bound_is_negative() {
        // e^5 - 1 > 9
        assert!(required_spread(5.0, 10).unwrap() < 0.0);
    }

    #[test]
    fn monotone_in_n_and_epsilon() {
        let eps = [0.01, 0.1, LOG_2, 1.0, 3.0];
        for w in eps.windows(2) {
            for n in [2usize, 3, 10, 1000] {
                assert!(required_spread(w[0], n).unwrap() > required_spread(w[1], n).unwrap());
            }
        }
        for &e in &eps {
            for n in 2..200usize {
                assert!(required_spread(e, n + 1).unwrap() > required_spread(e, n).unwrap());
            }
        }
    }

    #[test]
    fn two_equal_logits_meet_the_bound_with_equality() {
        for c in [-3.0, 0.0, 17.5] {
            let z = LogitVector::new(vec![c, c]).unwrap();
            let loss = ce_loss(&z, z.argmax()).unwrap().loss;
            assert!((loss - LOG_2).abs() < 1e-15);
            assert_eq!(z.spread(), 0.0);
            assert_eq!(required_spread(LOG_2, 2).unwrap(), 0.0);
        }
    }

    #[test]
    fn spread_below_bound_exceeds_ceiling() {
        for n in [3usize, 10, 101, 1000] {
            for eps in [0.05, LOG_2, 2.0] {
                let bound = required_spread(eps, n).unwrap();
                if bound <= 0.5 {
                    continue;
                }
                let mut v = vec![-(bound - 0.5); n];
                v[0] = 0.0;
                let z = LogitVector::new(v).unwrap();
                assert!(ce_loss(&z, 0).unwrap().loss > eps);
            }
        }
    }

    #[test]
    fn boundary_vector_sits_on_the_ceiling() {
        let n = 101;
        let bound = required_spread(LOG_2, n).unwrap();
        let mut v = vec![-bound; n];
        v[0] = 0.0;
        let loss = ce_loss(&LogitVector::new(v).unwrap(), 0).unwrap().loss;
        assert!((loss - LOG_2).abs() < 1e-14);
    }

    #[test]
    fn small_verification_run() {
        let r = verify_necessary_condition(&VerifyConfig::new(10, LOG_2, 3000, 42)).unwrap();
        assert_eq!(r.counterexamples, 0);
        assert!(r.passing > 0);
        assert!(r.min_passing_spread.unwrap() >= r.bound - SPREAD_TOLERANCE);
        let again = verify_necessary_condition(&VerifyConfig::new(10, LOG_2, 3000, 42)).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn sparse_verification_uses_k() {
        let cfg = VerifyConfig::new(150, LOG_2, 3000, 5).sparse(20);
        let r = verify_necessary_condition(&cfg).unwrap();
        assert!((r.bound - 19f64.ln()).abs() < 1e-12);
        assert_eq!(r.counterexamples, 0);
        assert!(r.passing > 0);
        let r1 = verify_necessary_condition(&VerifyConfig::new(50, LOG_2, 600, 5).sparse(1)).unwrap();
        assert_eq!(r1.bound, 0.0);
        assert_eq!(r1.passing, 600);
    }

    #[test]
    fn sparse_contrast_separates_the_losses() {
        for k in [1usize, 2, 10, 20, 50] {
            let c = sparse_contrast(150, k, 0.1).unwrap();
            assert!(c.sparse_loss <= LOG_2, "k={k}");
            assert!(c.full_loss > LOG_2, "k={k}");
            assert!(c.sparse_bound < c.full_bound);
        }
    }

    #[test]
    fn report_csv_shape() {
        let r = verify_necessary_condition(&VerifyConfig::new(10, LOG_2, 12, 1)).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], VerificationReport::CSV_HEADER);
        assert_eq!(lines[1].split(',').count(), 6);
        assert!(r.to_text().contains("counterexamples = 0"));
    }
}
