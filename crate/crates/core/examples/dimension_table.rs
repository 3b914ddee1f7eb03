//! A small run of the n_opt / n_D experiment, printed as CSV.

use regproj::harness::{run_table, ExperimentConfig};

fn main() -> regproj::Result<()> {
    let cfg = ExperimentConfig::from_str_kv(
        "c = 0.7, 0.8\ndelta = 1e-2, 1e-4, 1e-6\nr = 0.5, 1.5\nn-max = 40\nrepetitions = 3\nseed = 2024",
    )?;
    print!("{}", run_table(&cfg)?);
    Ok(())
}
