mod common;

use common::gradcheck::{loss_cases, primitive_cases, run_case, Case, TOL};

fn check_all(cases: Vec<Case>, seed: u64) {
    let mut failures = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let err = run_case(case, seed + i as u64);
        println!("{:<28} max relative error {err:.3e}", case.0);
        if !(err <= TOL) {
            failures.push(format!("{} ({err:.3e})", case.0));
        }
    }
    assert!(failures.is_empty(), "gradient mismatch: {failures:?}");
}

#[test]
fn primitives_match_central_differences() {
    check_all(primitive_cases(), 100);
}

#[test]
fn training_losses_match_central_differences() {
    check_all(loss_cases(), 900);
}
