//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::path::PathBuf;
use std::process::ExitCode;

use blocksplit::validation::{run_check, Check, ValidationOptions};

fn main() -> ExitCode {
    let opts = ValidationOptions {
        artifact_dir: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance")),
    };
    let mut failed = 0;
    for check in Check::ALL {
        let report = run_check(check, &opts);
        println!("{report}");
        failed += usize::from(!report.passed);
    }
    println!("{} of {} criteria passed", Check::ALL.len() - failed, Check::ALL.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
