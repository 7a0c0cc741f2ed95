//! Runs the acceptance criteria and prints one line per criterion.

use std::process::ExitCode;

fn main() -> ExitCode {
    let mut failed = 0;
    for report in fprw::acceptance::run_all() {
        println!("{report}");
        if !report.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
