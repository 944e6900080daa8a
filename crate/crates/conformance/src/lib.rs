//! Conformance suite: every worked example as a golden case plus a registry
//! of quantified invariants, evaluated into one pass/fail report.

pub mod cases;
pub mod golden;
pub mod invariants;
pub mod kernels;
pub mod oracles;
pub mod report;

use rayon::prelude::*;

pub use golden::{golden_cases, GoldenCase, Provenance};
pub use invariants::{registry, Invariant};
pub use kernels::{Kernels, LossEval, Reference};
pub use report::{CheckKind, CheckOutcome, ConformanceReport, Observation};

/// Runs every golden case and invariant whose id satisfies `select`.
///
/// Checks run in parallel; the report is in registry order regardless.
pub fn run_selected(kernels: &dyn Kernels, select: impl Fn(&str) -> bool + Sync) -> ConformanceReport {
    let goldens: Vec<GoldenCase> = golden_cases().into_iter().filter(|c| select(&c.id)).collect();
    let invariants: Vec<Invariant> = registry().into_iter().filter(|i| select(i.id)).collect();

    let mut checks: Vec<CheckOutcome> = goldens
        .par_iter()
        .map(|case| CheckOutcome {
            id: case.id.clone(),
            kind: CheckKind::Golden,
            tolerance: case.tolerance,
            observation: cases::run_golden(case, kernels),
        })
        .collect();
    checks.par_extend(invariants.par_iter().map(|inv| CheckOutcome {
        id: inv.id.to_string(),
        kind: CheckKind::Invariant,
        tolerance: inv.tolerance,
        observation: (inv.check)(kernels),
    }));
    ConformanceReport { checks }
}

pub fn run_conformance(kernels: &dyn Kernels) -> ConformanceReport {
    run_selected(kernels, |_| true)
}
