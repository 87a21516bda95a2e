//! Runs the invariant suite on a small sample set and prints one line per
//! invariant.

use finsler_kahler::cli::verify::{run_verification, VerifyOptions};

fn main() -> finsler_kahler::Result<()> {
    let report = run_verification(&VerifyOptions::new(42, 200))?;
    for e in &report.entries {
        println!(
            "{:<42} {:>6} samples  defect {:>10.3e} ≤ {:<8.1e} {}",
            e.name,
            e.samples,
            e.max_defect,
            e.tolerance,
            if e.pass { "ok" } else { "FAIL" }
        );
    }
    println!("all pass: {}", report.pass);
    Ok(())
}
