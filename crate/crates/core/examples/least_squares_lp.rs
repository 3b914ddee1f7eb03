//! Least squares in L^r for several r on the same noisy data.

use std::sync::Arc;

use regproj::operators::{apply_a_function, Kernel};
use regproj::solvers::{solve_least_squares, LeastSquaresOptions};
use regproj::spaces::{lp_norm_of, SampledFunction, SpaceSpec};
use regproj::{Function1D, Mesh};

fn main() -> regproj::Result<()> {
    let kernel = Kernel::volterra(1)?;
    let u_star = |s: f64| (3.0 * s).sin();
    let mesh = Mesh::new(8)?;
    let grid = Arc::new(mesh.quadrature_grid(16));
    // a smooth perturbation keeps the example deterministic
    let f_delta = SampledFunction::from_fn(grid.clone(), &|t: f64| {
        apply_a_function(&kernel, &u_star, t) + 1e-3 * (40.0 * t).cos()
    })?;
    for r in [1.5, 2.0, 3.0, 4.0] {
        let spec = SpaceSpec::lp(r)?;
        let res = solve_least_squares(&kernel, mesh, 2, &f_delta, &spec, &LeastSquaresOptions::default())?;
        let u = &res.solution;
        let err = lp_norm_of(&|s: f64| u.value(s) - u_star(s), &grid, &SpaceSpec::lp(2.0)?)?;
        println!(
            "r = {r:>3}: iterations {:>3}, converged {}, L2 error {err:.3e}",
            res.iterations, res.converged
        );
    }
    Ok(())
}
