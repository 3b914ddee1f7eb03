//! Least error (minimum-norm interpolation of node data) in L^p; the norm
//! of u_n grows with n on nested endpoint nodes.

use std::sync::Arc;

use regproj::operators::{model_rhs, CollocationScheme, Kernel};
use regproj::solvers::{least_error_grid, solve_least_error, LeastErrorOptions};
use regproj::spaces::SpaceSpec;
use regproj::Mesh;

fn main() -> regproj::Result<()> {
    let kernel = Kernel::volterra(1)?;
    let finest = CollocationScheme::endpoint(Mesh::new(32)?);
    let options = LeastErrorOptions {
        grid: Some(Arc::new(least_error_grid(&finest, 16))),
        ..Default::default()
    };
    for p in [1.5, 2.0, 4.0] {
        let spec = SpaceSpec::lp(p)?;
        print!("p = {p}:");
        for n in [1, 2, 4, 8, 16, 32] {
            let scheme = CollocationScheme::endpoint(Mesh::new(n)?);
            let f: Vec<f64> = scheme
                .nodes()
                .iter()
                .map(|&t| model_rhs(0.5, 1, t))
                .collect::<regproj::Result<_>>()?;
            let res = solve_least_error(&kernel, &scheme, &f, &spec, &options)?;
            print!("  ||u_{n}|| = {:.5}", res.solution.lp_norm(&spec)?);
        }
        println!();
    }
    Ok(())
}
