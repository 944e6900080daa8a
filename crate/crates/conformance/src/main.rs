use std::process::ExitCode;

use sparse_softmax_conformance::{run_conformance, Reference};

fn main() -> ExitCode {
    let csv = std::env::args().nth(1).as_deref() == Some("--csv");
    let report = run_conformance(&Reference);
    if csv {
        print!("{}", report.to_csv());
    } else {
        print!("{}", report.to_text());
    }
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
