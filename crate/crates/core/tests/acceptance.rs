//! Runs every acceptance criterion and prints one pass/fail line per criterion.
//! Exits nonzero when any criterion fails.

use cvrobust::acceptance::{run_all, Options};
use std::process::ExitCode;

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--nocapture`; none apply here
    let quick = std::env::args().any(|a| a == "--quick");
    let report = run_all(&Options { quick, seed: 0 }, |outcome, elapsed| {
        println!("{} ({:.1}s)", outcome.summary(), elapsed.as_secs_f64());
    });
    let failed = report.criteria.iter().filter(|c| !c.passed).count();
    println!(
        "acceptance: {} of {} criteria passed",
        report.criteria.len() - failed,
        report.criteria.len()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
