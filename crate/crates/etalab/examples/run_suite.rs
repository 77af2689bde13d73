//! Runs one verification suite with a small configuration and prints the cases.

use etalab::suite::{run_suite, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RunConfig::parse("samples = 6\nseed = 7\n")?;
    let report = run_suite("eta", &cfg)?;
    for c in &report.cases {
        println!("{:4} {:<40} {:<28} err {:.2e}", if c.pass { "ok" } else { "FAIL" }, c.name, c.tag, c.abs_err);
    }
    println!("passed: {} in {} ms", report.passed, report.wall_ms);
    Ok(())
}
