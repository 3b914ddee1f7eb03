//! τ(c), the default discrepancy constant, and the node-parameter check.

use regproj::rules::{check_collocation_params, default_b, tau_of_c};

fn main() -> regproj::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>12}", "c", "tau(c)", "b(c)", "admissible");
    for c in [0.55, 0.6, 0.7, 0.75, 0.8, 0.9, 0.95] {
        let report = check_collocation_params(&[c, 1.0], 2)?;
        println!(
            "{c:>5} {:>9.4} {:>9.4} {:>12?}",
            tau_of_c(c)?,
            default_b(c)?,
            report.verdict
        );
    }
    Ok(())
}
