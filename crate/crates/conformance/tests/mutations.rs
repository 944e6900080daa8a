//! Deliberately broken kernels must be caught by the named checks.

use sparse_softmax_conformance::{oracles, run_selected, Kernels, LossEval, Reference};

/// Exponentiates the support but never divides by the sum.
struct SkipRenormalization;

impl Kernels for SkipRenormalization {
    fn name(&self) -> &str {
        "skip-renormalization"
    }
    fn top_k(&self, z: &[f64], k: usize) -> Vec<usize> {
        Reference.top_k(z, k)
    }
    fn softmax(&self, z: &[f64]) -> Vec<f64> {
        Reference.softmax(z)
    }
    fn sparse_softmax(&self, z: &[f64], k: usize) -> Vec<f64> {
        let support = Reference.top_k(z, k);
        let m = support.iter().map(|&i| z[i]).fold(f64::NEG_INFINITY, f64::max);
        let mut p = vec![0.0; z.len()];
        for i in support {
            p[i] = (z[i] - m).exp();
        }
        p
    }
    fn ce_loss(&self, z: &[f64], t: usize) -> LossEval {
        Reference.ce_loss(z, t)
    }
    fn sparse_ce_loss(&self, z: &[f64], t: usize, k: usize, force: bool) -> LossEval {
        Reference.sparse_ce_loss(z, t, k, force)
    }
}

/// Breaks top-k ties toward the highest index.
struct HighestIndexTies;

impl HighestIndexTies {
    fn support(z: &[f64], k: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..z.len()).collect();
        order.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).unwrap().then(b.cmp(&a)));
        let mut s: Vec<usize> = order.into_iter().take(k.min(z.len())).collect();
        s.sort_unstable();
        s
    }
}

impl Kernels for HighestIndexTies {
    fn name(&self) -> &str {
        "highest-index-ties"
    }
    fn top_k(&self, z: &[f64], k: usize) -> Vec<usize> {
        Self::support(z, k)
    }
    fn softmax(&self, z: &[f64]) -> Vec<f64> {
        Reference.softmax(z)
    }
    fn sparse_softmax(&self, z: &[f64], k: usize) -> Vec<f64> {
        oracles::softmax_over(z, &Self::support(z, k))
    }
    fn ce_loss(&self, z: &[f64], t: usize) -> LossEval {
        Reference.ce_loss(z, t)
    }
    fn sparse_ce_loss(&self, z: &[f64], t: usize, k: usize, force: bool) -> LossEval {
        Reference.sparse_ce_loss(z, t, k, force)
    }
}

fn core_only(id: &str) -> bool {
    id.starts_with("core.")
}

#[test]
fn skipping_renormalization_fails_the_normalization_invariant() {
    let report = run_selected(&SkipRenormalization, core_only);
    let check = report.get("core.invariant.normalization").unwrap();
    assert!(!check.passed());
    assert!(report.to_text().contains("FAIL invariant core.invariant.normalization"));
    assert!(report.to_csv().contains("core.invariant.normalization,fail,"));
}

#[test]
fn highest_index_ties_fail_the_tie_goldens() {
    let report = run_selected(&HighestIndexTies, core_only);
    let check = report.get("core.top_k.tie_lowest_index").unwrap();
    assert!(!check.passed());
    assert!(check.observation.observed.contains("support=1"), "{}", check.observation.observed);
    assert!(!report.get("core.invariant.argmax").unwrap().passed());
    // Tie-free cases are unaffected.
    assert!(report.get("core.top_k.ordering").unwrap().passed());
}
