//! Pass/fail report in text and CSV form.

use std::fmt::Write;

pub const REPORT_CSV_HEADER: &str = "case_id,status,observed_error,tolerance";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckKind {
    Golden,
    Invariant,
}

/// What a check saw. `observed_error` is compared against the tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub observed_error: f64,
    pub expected: String,
    pub observed: String,
}

impl Observation {
    pub fn new(observed_error: f64, expected: impl Into<String>, observed: impl Into<String>) -> Self {
        Self {
            observed_error,
            expected: expected.into(),
            observed: observed.into(),
        }
    }

    /// A check that could not be evaluated at all.
    pub fn error(expected: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self::new(f64::INFINITY, expected, format!("error: {message}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub id: String,
    pub kind: CheckKind,
    pub tolerance: f64,
    pub observation: Observation,
}

impl CheckOutcome {
    /// NaN never passes.
    pub fn passed(&self) -> bool {
        self.observation.observed_error <= self.tolerance
    }

    pub fn status(&self) -> &'static str {
        if self.passed() {
            "pass"
        } else {
            "fail"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConformanceReport {
    pub checks: Vec<CheckOutcome>,
}

impl ConformanceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn get(&self, id: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_CSV_HEADER}\n");
        for c in &self.checks {
            let _ = writeln!(out, "{},{},{:e},{:e}", c.id, c.status(), c.observation.observed_error, c.tolerance);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let kind = match c.kind {
                CheckKind::Golden => "golden",
                CheckKind::Invariant => "invariant",
            };
            let _ = writeln!(
                out,
                "{} {:<9} {:<width$}  error {:.3e}  tolerance {:.0e}",
                c.status().to_uppercase(),
                kind,
                c.id,
                c.observation.observed_error,
                c.tolerance,
            );
            if !c.passed() {
                let _ = writeln!(out, "     expected: {}", c.observation.expected);
                let _ = writeln!(out, "     observed: {}", c.observation.observed);
            }
        }
        let failed = self.failures().count();
        let _ = writeln!(out, "{} checks, {} passed, {} failed", self.checks.len(), self.checks.len() - failed, failed);
        out
    }
}
