//! One line per acceptance criterion, then a nonzero exit if any failed.
//! Runs without the libtest harness so the lines are never captured.

use std::process::ExitCode;

use qexch::acceptance::{run_criterion, ExperimentConfig, CRITERION_COUNT};

fn main() -> ExitCode {
    let config = ExperimentConfig::default();
    let mut failed = Vec::new();
    for id in 1..=CRITERION_COUNT {
        let r = run_criterion(id, &config).expect("valid criterion id and config");
        println!(
            "[{}] criterion {:>2} {}: {} | bound: {} | {:.2}s",
            if r.pass { "PASS" } else { "FAIL" },
            r.id,
            r.name,
            r.observed,
            r.bound,
            r.elapsed.as_secs_f64()
        );
        if !r.pass {
            failed.push(r.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: {CRITERION_COUNT}/{CRITERION_COUNT} criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
