use nalgebra::{DMatrix, DVector, Dyn, LU};

use super::{condition_number, dense_points, Approximation, NodeInterpolant, SolveResult, MAX_CONDITION};
use crate::error::{ensure_finite, Error, Result};
use crate::function::Function1D;
use crate::operators::{collocation_matrix, point_matrix, CollocationScheme, Kernel};
use crate::spaces::DEFAULT_SUP_SAMPLES_PER_CELL;
use crate::splines::PiecewisePoly;

/// A factored collocation system, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct CollocationSystem {
    kernel: Kernel,
    scheme: CollocationScheme,
    trial_k: usize,
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
    condition: f64,
    dense_points: Vec<f64>,
    dense: DMatrix<f64>,
    warnings: Vec<String>,
}

impl CollocationSystem {
    pub fn new(kernel: &Kernel, scheme: &CollocationScheme, trial_k: usize) -> Result<Self> {
        if scheme.k() != trial_k {
            return Err(Error::Dimension(format!(
                "collocation needs as many nodes per cell as trial functions ({} vs {trial_k})",
                scheme.k()
            )));
        }
        let matrix = collocation_matrix(kernel, scheme, trial_k);
        let condition = condition_number(&matrix);
        if !(condition < MAX_CONDITION) {
            return Err(Error::Singular { condition });
        }
        let lu = matrix.clone().lu();
        let mesh = scheme.mesh();
        let nodes = scheme.nodes();
        let dense_points = dense_points(mesh.cells(), DEFAULT_SUP_SAMPLES_PER_CELL, &nodes);
        let dense = point_matrix(kernel, mesh, trial_k, &dense_points);
        let warnings = kernel.resolution_warning(mesh).into_iter().collect();
        Ok(Self {
            kernel: kernel.clone(),
            scheme: scheme.clone(),
            trial_k,
            matrix,
            lu,
            condition,
            dense_points,
            dense,
            warnings,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scheme(&self) -> &CollocationScheme {
        &self.scheme
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Points at which residuals are sampled (uniform plus the nodes).
    pub fn dense_points(&self) -> &[f64] {
        &self.dense_points
    }

    /// `A u` at [`CollocationSystem::dense_points`] for coefficient vector `coeffs`.
    pub fn dense_image(&self, coeffs: &[f64]) -> Vec<f64> {
        (&self.dense * DVector::from_column_slice(coeffs)).iter().copied().collect()
    }

    /// `max |A u - f_ref|` over the dense points.
    pub fn sup_residual<F: Function1D + ?Sized>(&self, coeffs: &[f64], f_ref: &F) -> f64 {
        self.dense_image(coeffs)
            .iter()
            .zip(&self.dense_points)
            .map(|(au, &t)| (au - f_ref.value(t)).abs())
            .fold(0.0, f64::max)
    }

    /// Solves `(A u_n)(t_{i,j}) = values[i,j]`.
    pub fn solve(&self, values: &[f64]) -> Result<SolveResult> {
        let m = self.scheme.len();
        if values.len() != m {
            return Err(Error::Dimension(format!("expected {m} node values, got {}", values.len())));
        }
        ensure_finite(values)?;
        let rhs = DVector::from_column_slice(values);
        let x = self
            .lu
            .solve(&rhs)
            .ok_or(Error::Singular { condition: self.condition })?;
        let residual_nodes = (&self.matrix * &x - &rhs).amax();
        let coeffs: Vec<f64> = x.iter().copied().collect();
        let data = NodeInterpolant::new(self.scheme.nodes(), values.to_vec())?;
        let residual_c = self.sup_residual(&coeffs, &data);
        let u = PiecewisePoly::new(self.scheme.mesh(), self.trial_k, coeffs)?;
        Ok(SolveResult {
            solution: Approximation::Spline(u),
            residual_c,
            residual_nodes,
            dual: None,
            iterations: 1,
            converged: true,
            condition_estimate: self.condition,
            warnings: self.warnings.clone(),
            kernel: self.kernel.clone(),
        })
    }
}

/// Collocation: `u_n ∈ S_{k-1}` with `(A u_n)(t_{i,j}) = f^δ(t_{i,j})`.
pub fn solve_collocation(
    kernel: &Kernel,
    scheme: &CollocationScheme,
    trial_k: usize,
    values: &[f64],
) -> Result<SolveResult> {
    CollocationSystem::new(kernel, scheme, trial_k)?.solve(values)
}
