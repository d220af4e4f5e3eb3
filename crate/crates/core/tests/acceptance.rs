//! Runs the ten primary acceptance criteria at their stated tolerances and budgets, printing
//! one pass/fail line per criterion.

use nlsx::cli_io::acceptance::{run_suite, CRITERIA};
use std::io::Write;

#[test]
fn primary_acceptance_suite() {
    let ids: Vec<usize> = CRITERIA.iter().map(|c| c.0).collect();
    let reports = run_suite(&ids, |r| {
        let mut out = std::io::stdout();
        let _ = writeln!(out, "{}", r.line());
        for c in &r.checks {
            let _ = writeln!(out, "    {} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        let _ = out.flush();
    })
    .expect("criterion ids are valid");
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed()).map(|r| r.line()).collect();
    assert!(failed.is_empty(), "failing criteria:\n{}", failed.join("\n"));
}
