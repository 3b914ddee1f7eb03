use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{
    condition_number, dense_points, signed_pow, Approximation, DualSolution, NodeInterpolant,
    SolveResult, MAX_CONDITION,
};
use crate::error::{ensure_finite, Error, Result};
use crate::function::Function1D;
use crate::operators::{CollocationScheme, DiracCombo, Kernel};
use crate::quadrature::QuadratureGrid;
use crate::spaces::{SampledFunction, SpaceSpec, DEFAULT_QUADRATURE_ORDER, DEFAULT_SUP_SAMPLES_PER_CELL};

#[derive(Debug, Clone)]
pub struct LeastErrorOptions {
    /// Quadrature grid for `E = L^p`. Must have the nodes among its
    /// breakpoints. Defaults to the mesh refined at the nodes. Passing one
    /// shared grid to every level of a nested family makes the discrete
    /// problems exactly nested.
    pub grid: Option<Arc<QuadratureGrid>>,
    pub max_iter: usize,
    /// Constraint tolerance relative to `max(1, max|f^δ(t_j)|)`.
    pub tol: f64,
    /// Compute `residual_c` by dense sampling (costly for large grids).
    pub dense_residual: bool,
}

impl Default for LeastErrorOptions {
    fn default() -> Self {
        Self {
            grid: None,
            max_iter: 200,
            tol: 1e-12,
            dense_residual: true,
        }
    }
}

/// Breakpoints of the scheme's mesh plus its nodes, `order` Gauss points each.
pub fn least_error_grid(scheme: &CollocationScheme, order: usize) -> QuadratureGrid {
    let mut bps = scheme.mesh().breakpoints();
    bps.extend(scheme.nodes());
    QuadratureGrid::composite(&bps, order)
}

/// Least error in `L^p`: the minimum-norm `u` with `(Au)(t_{i,j}) = f^δ(t_{i,j})`.
///
/// Solved through the dual: `u = J_{q*}(A* v)` where `v = Σ λ_j δ_{t_j}`
/// minimizes `Φ(λ) = 1/q* ||A* v||^{q*} - Σ λ_j f_j`, by Newton's method with
/// backtracking, started from the `p = 2` solution.
pub fn solve_least_error(
    kernel: &Kernel,
    scheme: &CollocationScheme,
    values: &[f64],
    e_spec: &SpaceSpec,
    options: &LeastErrorOptions,
) -> Result<SolveResult> {
    let nodes = scheme.nodes();
    let m = nodes.len();
    if values.len() != m {
        return Err(Error::Dimension(format!("expected {m} node values, got {}", values.len())));
    }
    ensure_finite(values)?;
    let dual_spec = e_spec.dual()?;
    let p_star = dual_spec.p().expect("L^p");
    let q_star = dual_spec.q()?;
    let grid = match &options.grid {
        Some(g) => g.clone(),
        None => Arc::new(least_error_grid(scheme, DEFAULT_QUADRATURE_ORDER)),
    };
    let pts = grid.points();
    let w = grid.weights();
    let kmat = DMatrix::from_fn(m, pts.len(), |j, i| kernel.eval(nodes[j], pts[i]));
    let y = DVector::from_column_slice(values);
    let scale = values.iter().fold(1.0f64, |a, v| a.max(v.abs()));

    // Hilbert start: (K W K^T) λ = y
    let mut kw = kmat.clone();
    for (i, mut col) in kw.column_iter_mut().enumerate() {
        col *= w[i];
    }
    let gram = &kw * kmat.transpose();
    let condition = condition_number(&gram);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let mut lambda = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&y),
        None => gram.clone().lu().solve(&y).ok_or(Error::Singular { condition })?,
    };

    let pnorm = |g: &DVector<f64>| -> f64 {
        g.iter()
            .zip(w)
            .map(|(x, w)| w * x.abs().powf(p_star))
            .sum::<f64>()
            .powf(1.0 / p_star)
    };
    // J_{q*}(g) pointwise, given ||g||
    let jmap = |g: &DVector<f64>, norm: f64| -> DVector<f64> {
        let f = if q_star == p_star || norm == 0.0 {
            1.0
        } else {
            norm.powf(q_star - p_star)
        };
        g.map(|x| f * signed_pow(x, p_star - 1.0))
    };
    let phi = |lam: &DVector<f64>| -> f64 {
        let g = kmat.tr_mul(lam);
        pnorm(&g).powf(q_star) / q_star - lam.dot(&y)
    };

    let hilbert = p_star == 2.0 && q_star == 2.0;
    let mut iterations = 1;
    let mut converged = hilbert;
    if !hilbert {
        let mut obj = phi(&lambda);
        for it in 0..options.max_iter {
            iterations = it + 2;
            let g = kmat.tr_mul(&lambda);
            let norm = pnorm(&g);
            let u = jmap(&g, norm);
            let grad = &kw * &u - &y;
            if grad.amax() <= options.tol * scale {
                converged = true;
                break;
            }
            // dJ/dg = N^{q*-p*} (p*-1) |g|^{p*-2} + rank-one term when q* != p*
            let nf = if q_star == p_star || norm == 0.0 {
                1.0
            } else {
                norm.powf(q_star - p_star)
            };
            let gmax = g.amax();
            let eps2 = (1e-10 * gmax).powi(2);
            let diag: Vec<f64> = g
                .iter()
                .map(|&x| nf * (p_star - 1.0) * (x * x + eps2).powf(0.5 * (p_star - 2.0)))
                .collect();
            let mut kwd = kw.clone();
            for (i, mut col) in kwd.column_iter_mut().enumerate() {
                col *= diag[i];
            }
            let mut hess = &kwd * kmat.transpose();
            if q_star != p_star && norm > 0.0 {
                let v = g.map(|x| signed_pow(x, p_star - 1.0));
                let kv = &kw * v;
                let beta = (q_star - p_star) * norm.powf(q_star - 2.0 * p_star);
                hess += &kv * kv.transpose() * beta;
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => hess
                    .lu()
                    .solve(&(-&grad))
                    .ok_or(Error::Singular { condition: f64::INFINITY })?,
            };
            let slope = grad.dot(&step);
            if !(slope < 0.0) {
                converged = grad.amax() <= 1e-8 * scale;
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-14 {
                let trial = &lambda + &step * t;
                let tobj = phi(&trial);
                if tobj <= obj + 1e-4 * t * slope {
                    lambda = trial;
                    obj = tobj;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                converged = grad.amax() <= 1e-8 * scale;
                break;
            }
        }
    }

    let g = kmat.tr_mul(&lambda);
    let u = jmap(&g, pnorm(&g));
    let residual_nodes = (&kw * &u - &y).amax();
    let converged = converged || residual_nodes <= 1e-8 * scale;
    let dual = DiracCombo::new(nodes.clone(), lambda.iter().copied().collect())?;
    let adjoint = SampledFunction::new(grid.clone(), g.iter().copied().collect())?;
    let solution = DualSolution::new(kernel.clone(), dual.clone(), e_spec, &adjoint)?;
    let residual_c = if options.dense_residual {
        let data = NodeInterpolant::new(nodes.clone(), values.to_vec())?;
        dense_points(scheme.mesh().cells(), DEFAULT_SUP_SAMPLES_PER_CELL, &nodes)
            .into_iter()
            .map(|t| (solution.image_at(t) - data.value(t)).abs())
            .fold(0.0, f64::max)
    } else {
        f64::NAN
    };
    let mut warnings: Vec<String> = kernel.resolution_warning(scheme.mesh()).into_iter().collect();
    if !converged {
        warnings.push(format!(
            "dual Newton stopped after {iterations} iterations; constraint residual {residual_nodes:.3e}"
        ));
    }
    Ok(SolveResult {
        solution: Approximation::Dual(solution),
        residual_c,
        residual_nodes,
        dual: Some(dual),
        iterations,
        converged,
        condition_estimate: condition,
        warnings,
        kernel: kernel.clone(),
    })
}
