//! The monotone error rule for least error in L^4 on dyadic endpoint nodes.

use regproj::harness::{solve_problem, ExperimentConfig, MethodKind, RuleChoice};

fn main() -> regproj::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.method = MethodKind::LeastError;
    cfg.rule = RuleChoice::Me;
    cfg.l = 1;
    cfg.k = 1;
    cfg.p = 4.0;
    cfg.r = vec![0.5];
    cfg.n_max = 64;
    for delta in [1e-2, 1e-3, 1e-4] {
        cfg.delta = vec![delta];
        let report = solve_problem(&cfg)?;
        let trace = report.trace.as_ref().expect("me traces");
        println!("δ = {delta:e}: n = {:>2} ({}), L4 error {:.3e}", report.n, trace.status(), report.error);
        for r in &trace.records {
            println!("    n = {:>2}  d_ME = {:.3e}  {}", r.n, r.criterion_value, r.decision);
        }
    }
    Ok(())
}
