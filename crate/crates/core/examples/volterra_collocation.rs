//! Collocation for the twice-integrating Volterra operator with linear
//! splines, exact and noisy data.

use regproj::harness::gen_noise;
use regproj::operators::{model_rhs, CollocationScheme, Kernel};
use regproj::solvers::CollocationSystem;
use regproj::spaces::SpaceSpec;
use regproj::{Function1D, Mesh};

fn main() -> regproj::Result<()> {
    let kernel = Kernel::volterra(2)?;
    let r = 1.5;
    let exact_u = |s: f64| s.powf(r);
    println!("{:>4} {:>12} {:>12} {:>10}", "n", "L1 err (δ=0)", "L1 err (δ=1e-4)", "cond");
    for n in [1, 2, 4, 8, 16, 32] {
        let scheme = CollocationScheme::with_endpoint(Mesh::new(n)?, 0.7)?;
        let system = CollocationSystem::new(&kernel, &scheme, 2)?;
        let f: Vec<f64> = scheme
            .nodes()
            .iter()
            .map(|&t| model_rhs(r, 2, t))
            .collect::<regproj::Result<_>>()?;
        let noisy = gen_noise(&f, 1e-4, 7)?;
        let mut errs = [0.0; 2];
        for (e, data) in errs.iter_mut().zip([&f, &noisy]) {
            let u = system.solve(data)?.solution;
            let diff = |s: f64| u.value(s) - exact_u(s);
            *e = regproj::spaces::lp_norm_of(&diff, &Mesh::new(n)?.quadrature_grid(16), &SpaceSpec::lp(1.0)?)?;
        }
        println!("{n:>4} {:>12.3e} {:>15.3e} {:>10.2e}", errs[0], errs[1], system.condition());
    }
    Ok(())
}
