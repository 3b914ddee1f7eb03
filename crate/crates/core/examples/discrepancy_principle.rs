//! Choosing n by the discrepancy principle, with the per-level trace.

use regproj::harness::{solve_problem, ExperimentConfig};

fn main() -> regproj::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_str("c = 0.8\ndelta = 1e-5\nr = 0.5\nn-max = 64\nrule = dp\nseed = 3")?;
    let report = solve_problem(&cfg)?;
    let trace = report.trace.as_ref().expect("dp traces");
    print!("{}", trace.to_csv_string()?);
    println!(
        "chosen n = {}, residual {:.3e} <= b·δ = {:.3e}, L1 error {:.3e}",
        report.n,
        report.residual,
        trace.parameter * trace.delta,
        report.error
    );
    Ok(())
}
