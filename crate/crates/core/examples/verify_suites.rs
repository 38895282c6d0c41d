//! Run every numerical property suite and print the JSON report.

use dc_optlab::verify::{run_suite, Suite};

fn main() -> dc_optlab::Result<()> {
    let report = run_suite(Suite::All, 0)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    if !report.passed {
        std::process::exit(1);
    }
    Ok(())
}
