use std::collections::HashSet;

use sparse_softmax_conformance::cases::oracle_tolerance;
use sparse_softmax_conformance::oracles::oracle_description;
use sparse_softmax_conformance::{golden_cases, registry, run_conformance, run_selected, Provenance, Reference};

#[test]
fn reference_passes_everything() {
    let report = run_conformance(&Reference);
    assert!(report.all_passed(), "{}", report.to_text());
    assert_eq!(report.checks.len(), golden_cases().len() + registry().len());
    assert_eq!(report.to_csv().lines().count(), report.checks.len() + 1);
}

#[test]
fn every_worked_example_appears_exactly_once() {
    let cases = golden_cases();
    assert_eq!(cases.len(), 36);
    let ids: HashSet<&str> = cases.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids.len(), cases.len());
    let inputs: HashSet<(&str, String)> = cases
        .iter()
        .map(|c| (c.op.as_str(), format!("{:?}", c.inputs)))
        .collect();
    assert_eq!(inputs.len(), cases.len(), "two cases share op and inputs");
    for module in ["core", "analysis", "trainer", "cli"] {
        assert!(cases.iter().any(|c| c.id.starts_with(module)));
    }
}

#[test]
fn derived_cases_name_an_implemented_oracle() {
    for case in golden_cases().iter().filter(|c| c.provenance == Provenance::Computed) {
        assert!(oracle_description(&case.oracle).is_some(), "{}: {}", case.id, case.oracle);
    }
    // Oracles with a numeric check are exercised against the frozen values.
    let checked: HashSet<String> = golden_cases()
        .into_iter()
        .filter(|c| c.provenance == Provenance::Computed && oracle_tolerance(&c.oracle).is_some())
        .map(|c| c.oracle)
        .collect();
    assert!(checked.len() >= 5, "{checked:?}");
}

#[test]
fn invariant_ids_are_unique_and_scoped() {
    let reg = registry();
    let ids: HashSet<&str> = reg.iter().map(|i| i.id).collect();
    assert_eq!(ids.len(), reg.len());
    for inv in &reg {
        assert!(inv.id.contains(".invariant."), "{}", inv.id);
        assert!(!inv.statement.is_empty() && !inv.budget.is_empty());
    }
}

#[test]
fn report_content_is_schedule_independent() {
    let select = |id: &str| id.starts_with("core.");
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_selected(&Reference, select));
    let b = four.install(|| run_selected(&Reference, select));
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_text(), b.to_text());
}
