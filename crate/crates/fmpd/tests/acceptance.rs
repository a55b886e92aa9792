//! Acceptance criteria 1–10. Prints one pass/fail line per criterion and the
//! full check table of any criterion that fails. Runs without the libtest
//! harness so the lines are never captured.

use std::process::ExitCode;
use std::time::Instant;

use fmpd::verify::{criterion, AcceptanceSizes};

fn main() -> ExitCode {
    let sizes = AcceptanceSizes::default();
    let mut failed = Vec::new();
    for id in 1..=10u8 {
        let start = Instant::now();
        let suite = criterion(id, &sizes).expect("criterion id in range");
        println!("criterion {} ({:.1} s)", suite.headline(), start.elapsed().as_secs_f64());
        if !suite.passed() {
            print!("{}", suite.table());
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
