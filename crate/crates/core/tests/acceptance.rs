//! Prints one pass/fail line per acceptance criterion; exits non-zero if a
//! blocking criterion fails. Runs without the libtest harness so the lines
//! are never captured.

use std::process::ExitCode;
use std::time::Instant;

use hho_brinkman::assembly::with_workers;
use hho_brinkman::verification::suite::{compare_runs, conditioning_trend, deterministic_suites, Check};

fn main() -> ExitCode {
    let start = Instant::now();
    let one = with_workers(1, || deterministic_suites(1)).expect("worker pool");
    for c in &one {
        println!("{}", c.line());
    }
    let trend = conditioning_trend(1);
    println!("{}", trend.line());
    let four = with_workers(4, || deterministic_suites(4)).expect("worker pool");
    let det = compare_runs(&one, &four, start);
    println!("{}", det.line());

    let blocking: Vec<&Check> = one.iter().chain([&det]).filter(|c| !c.passed).collect();
    if blocking.is_empty() {
        println!("acceptance: all blocking criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {:?}", blocking.iter().map(|c| c.id).collect::<Vec<_>>());
        ExitCode::FAILURE
    }
}
