use nalgebra::{DMatrix, DVector};

use super::{condition_number, Approximation, SolveResult, MAX_CONDITION};
use crate::error::{Error, Result};
use crate::operators::{point_matrix, Kernel};
use crate::spaces::{self, SampledFunction, SpaceSpec};
use crate::splines::{Mesh, PiecewisePoly};

#[derive(Debug, Clone, Copy)]
pub struct LeastSquaresOptions {
    pub max_iter: usize,
    /// First-order tolerance relative to `max(1, ||f^δ||_r)`.
    pub tol: f64,
}

impl Default for LeastSquaresOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-12,
        }
    }
}

struct Problem<'a> {
    /// `A φ_j` at the quadrature points
    a: &'a DMatrix<f64>,
    w: &'a [f64],
    f: &'a [f64],
    r: f64,
    eps2: f64,
}

impl Problem<'_> {
    fn residual(&self, c: &DVector<f64>) -> DVector<f64> {
        self.a * c - DVector::from_column_slice(self.f)
    }

    /// Smoothed `Σ w (ρ² + ε²)^{r/2}`.
    fn objective(&self, rho: &DVector<f64>) -> f64 {
        rho.iter()
            .zip(self.w)
            .map(|(x, w)| w * (x * x + self.eps2).powf(0.5 * self.r))
            .sum()
    }

    fn gradient_hessian(&self, rho: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let r = self.r;
        let mut g1 = DVector::zeros(rho.len());
        let mut g2 = DVector::zeros(rho.len());
        for (i, (&x, &w)) in rho.iter().zip(self.w).enumerate() {
            let s = x * x + self.eps2;
            g1[i] = w * r * s.powf(0.5 * r - 1.0) * x;
            g2[i] = w * r * s.powf(0.5 * r - 2.0) * ((r - 1.0) * x * x + self.eps2);
        }
        let grad = self.a.tr_mul(&g1);
        let mut scaled = self.a.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= g2[i];
        }
        (grad, self.a.tr_mul(&scaled))
    }
}

/// Largest directional derivative of `c ↦ ||A c - f||_{L^r}` along the
/// (orthonormal) basis directions.
pub(crate) fn norm_gradient(a: &DMatrix<f64>, w: &[f64], f: &[f64], r: f64, c: &[f64]) -> f64 {
    let rho = a * DVector::from_column_slice(c) - DVector::from_column_slice(f);
    let sum: f64 = rho.iter().zip(w).map(|(x, w)| w * x.abs().powf(r)).sum();
    if sum == 0.0 {
        return 0.0;
    }
    let g: DVector<f64> = rho
        .iter()
        .zip(w)
        .map(|(x, w)| w * x.abs().powf(r - 1.0) * x.signum())
        .collect::<Vec<_>>()
        .into();
    let grad = a.tr_mul(&g) * sum.powf(1.0 / r - 1.0);
    grad.amax()
}

/// Least squares in `L^r`: minimizes `||A u_n - f^δ||_{L^r}` over `S_{k-1}`
/// on `mesh`, with integrals taken by `f_delta`'s quadrature grid.
///
/// `r = 2` is a weighted linear least-squares solve (QR). Otherwise Newton's
/// method with Armijo backtracking runs on the smoothed objective
/// `Σ w (ρ² + ε²)^{r/2}`, `ε = 1e-12·scale`, started from the `r = 2` solution.
pub fn solve_least_squares(
    kernel: &Kernel,
    mesh: Mesh,
    trial_k: usize,
    f_delta: &SampledFunction,
    f_spec: &SpaceSpec,
    options: &LeastSquaresOptions,
) -> Result<SolveResult> {
    let r = match f_spec.p() {
        Some(r) if r > 1.0 && r.is_finite() => r,
        _ => return Err(Error::Domain("least squares needs L^r with 1 < r < ∞".into())),
    };
    let grid = f_delta.grid();
    let a = point_matrix(kernel, mesh, trial_k, grid.points());
    let w = grid.weights();
    let f = f_delta.values();
    let scale = spaces::lp_norm(f_delta, f_spec)?.max(1.0);

    // r = 2 via QR of W^{1/2} A
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let mut wa = a.clone();
    for (i, mut row) in wa.row_iter_mut().enumerate() {
        row *= sw[i];
    }
    let condition = condition_number(&wa);
    if !(condition < MAX_CONDITION) || wa.nrows() < wa.ncols() {
        return Err(Error::Singular { condition });
    }
    let wf = DVector::from_iterator(f.len(), f.iter().zip(&sw).map(|(x, s)| x * s));
    let qr = wa.qr();
    let qtf = qr.q().tr_mul(&wf);
    let mut c = qr
        .r()
        .solve_upper_triangular(&qtf)
        .ok_or(Error::Singular { condition })?;

    let mut iterations = 1;
    let mut converged = true;
    if r != 2.0 {
        let eps = 1e-12 * scale;
        let problem = Problem {
            a: &a,
            w,
            f,
            r,
            eps2: eps * eps,
        };
        converged = false;
        let mut rho = problem.residual(&c);
        let mut obj = problem.objective(&rho);
        for it in 0..options.max_iter {
            iterations = it + 2;
            if norm_gradient(&a, w, f, r, c.as_slice()) <= options.tol * scale {
                converged = true;
                break;
            }
            let (grad, hess) = problem.gradient_hessian(&rho);
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => match hess.lu().solve(&(-&grad)) {
                    Some(s) => s,
                    None => break,
                },
            };
            let slope = grad.dot(&step);
            if !(slope < 0.0) {
                // no descent left at working precision
                converged = norm_gradient(&a, w, f, r, c.as_slice()) <= 1e-8 * scale;
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let trial = &c + &step * t;
                let trho = problem.residual(&trial);
                let tobj = problem.objective(&trho);
                if tobj <= obj + 1e-4 * t * slope {
                    c = trial;
                    rho = trho;
                    obj = tobj;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted || step.amax() * t <= 1e-16 * c.amax().max(1.0) {
                converged = norm_gradient(&a, w, f, r, c.as_slice()) <= 1e-8 * scale;
                break;
            }
        }
    }

    let rho = &a * &c - DVector::from_column_slice(f);
    let residual_c = rho.amax();
    let u = PiecewisePoly::new(mesh, trial_k, c.iter().copied().collect())?;
    let mut warnings: Vec<String> = kernel.resolution_warning(mesh).into_iter().collect();
    if !converged {
        warnings.push(format!(
            "Newton stopped after {iterations} iterations; first-order measure {:.3e}",
            norm_gradient(&a, w, f, r, u.coeffs())
        ));
    }
    Ok(SolveResult {
        solution: Approximation::Spline(u),
        residual_c,
        residual_nodes: residual_c,
        dual: None,
        iterations,
        converged,
        condition_estimate: condition,
        warnings,
        kernel: kernel.clone(),
    })
}
