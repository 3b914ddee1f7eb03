//! Duality mappings and Bregman distances in L^p.

use std::sync::Arc;

use regproj::quadrature::QuadratureGrid;
use regproj::spaces::{
    bregman_distance, bregman_symmetric, duality_map, duality_map_inverse, lp_norm, pairing, SampledFunction,
    SpaceSpec,
};

fn main() -> regproj::Result<()> {
    let grid = Arc::new(QuadratureGrid::uniform(32, 16));
    let u = SampledFunction::from_fn(grid.clone(), &|s: f64| (5.0 * s).sin() + 0.3)?;
    let v = SampledFunction::from_fn(grid, &|s: f64| s * s - 0.2)?;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let spec = SpaceSpec::lp(p)?;
        let q = spec.q()?;
        let ju = duality_map(&u, &spec)?;
        let norm = lp_norm(&u, &spec)?;
        let back = duality_map_inverse(&ju, &spec)?;
        let roundtrip = back.sub(&u)?.values().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        println!(
            "p = {p}: <J u, u> - ||u||^q = {:+.1e}, |J^-1 J u - u| = {roundtrip:.1e}, D(v,u) = {:.4}, D_sym = {:.4}",
            pairing(&ju, &u)? - norm.powf(q),
            bregman_distance(&v, &u, &spec)?,
            bregman_symmetric(&v, &u, &spec)?,
        );
    }
    Ok(())
}
