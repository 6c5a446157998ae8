//! Prints one PASS/FAIL line per acceptance criterion. Criteria listed in
//! `KNOWN_UNATTAINABLE` are reported as measured; every other one must pass.

use std::io::Write;

use antichain_core::acceptance::{attainable_all_pass, run_each, AcceptanceConfig, KNOWN_UNATTAINABLE};

#[test]
fn acceptance_matrix() {
    let config = AcceptanceConfig::default();
    // Straight to the stderr handle so the lines survive output capture.
    let mut err = std::io::stderr();
    let outcomes = run_each(&config, |o| {
        let _ = writeln!(err, "{o}");
    });
    assert_eq!(outcomes.len(), 9);
    let failing: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let _ = writeln!(err, "failing: {failing:?}; expected unattainable: {KNOWN_UNATTAINABLE:?}");
    assert!(attainable_all_pass(&outcomes), "an attainable criterion failed: {failing:?}");
}
