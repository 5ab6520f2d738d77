use std::time::Instant;

use tfd_core::verify::{run_criterion, Status, VerifySettings, CRITERIA};

#[test]
fn acceptance() {
    let settings = VerifySettings::default();
    let mut failed = Vec::new();
    for n in 1..=CRITERIA {
        let start = Instant::now();
        let report = run_criterion(n, &settings);
        let status = report.criterion_status(n);
        let label = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        println!("criterion {n:>2}: {label} ({:.1} s)", start.elapsed().as_secs_f64());
        for c in &report.checks {
            let op = if c.strict { "<" } else { "<=" };
            println!("    {:<36} {:>12.3e} {op} {:.1e}  {:?} {}", c.id, c.measured, c.tolerance, c.status, c.detail);
        }
        if status != Status::Pass {
            failed.push(n);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
