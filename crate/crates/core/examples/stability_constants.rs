//! Stability constants: exact κ_n growth for p = 2 and the collocation
//! chain κ_n <= κ̃_n <= τ_n κ_n.

use regproj::operators::{CollocationScheme, Kernel};
use regproj::spaces::SpaceSpec;
use regproj::stability::{estimate_kappa, kappa_chain_check, loglog_slope, stability_report};
use regproj::Mesh;

fn main() -> regproj::Result<()> {
    let l2 = SpaceSpec::lp(2.0)?;
    let ns = [4, 8, 16, 32, 64];
    for l in [1, 2] {
        let kernel = Kernel::volterra(l)?;
        let kappas: Vec<f64> = ns
            .iter()
            .map(|&n| estimate_kappa(&kernel, Mesh::new(n)?, 2, &l2, &l2, 0, 0).map(|e| e.value))
            .collect::<regproj::Result<_>>()?;
        let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        println!("l = {l}: kappa_n = {kappas:.3?}, slope {:.3}", loglog_slope(&x, &kappas));
    }

    let kernel = Kernel::volterra(2)?;
    let e = SpaceSpec::lp(1.0)?;
    println!("\n{:>3} {:>10} {:>8} {:>10} {:>10} {:>6}", "n", "kappa", "tau", "kappa~", "kappa*", "chain");
    for n in [1, 2, 4, 8] {
        let scheme = CollocationScheme::with_endpoint(Mesh::new(n)?, 0.7)?;
        let rep = stability_report(&kernel, &scheme, 2, &e, 500, 1)?;
        println!(
            "{:>3} {:>10.3} {:>8.3} {:>10.3} {:>10.3} {:>6}",
            n,
            rep.kappa,
            rep.tau,
            rep.kappa_tilde,
            rep.kappa_star,
            kappa_chain_check(&rep).holds
        );
    }
    Ok(())
}
