//! The three projection methods: collocation, least squares in `L^r` and
//! least error in `L^p`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::Function1D;
use crate::operators::{apply_a, DiracCombo, Kernel};
use crate::quadrature::{GaussLegendre, QuadratureGrid};
use crate::spaces::{self, SampledFunction, SpaceSpec, DEFAULT_QUADRATURE_ORDER, DEFAULT_SUP_SAMPLES_PER_CELL};
use crate::splines::PiecewisePoly;

mod collocation;
mod least_error;
mod least_squares;

pub use collocation::{solve_collocation, CollocationSystem};
pub use least_error::{least_error_grid, solve_least_error, LeastErrorOptions};
pub use least_squares::{solve_least_squares, LeastSquaresOptions};

/// `u_n = J_{q*}(A* v)` of the least error method, evaluated on demand.
#[derive(Debug, Clone)]
pub struct DualSolution {
    kernel: Kernel,
    dual: DiracCombo,
    /// `(p*, q*)` of the dual space
    p_star: f64,
    factor: f64,
    samples: SampledFunction,
}

impl DualSolution {
    fn new(kernel: Kernel, dual: DiracCombo, e_spec: &SpaceSpec, adjoint: &SampledFunction) -> Result<Self> {
        let d = e_spec.dual()?;
        let p_star = d.p().expect("L^p space");
        let q_star = d.q()?;
        let norm = spaces::lp_norm(adjoint, &d)?;
        let factor = if q_star == p_star || norm == 0.0 {
            1.0
        } else {
            norm.powf(q_star - p_star)
        };
        let samples = adjoint.map(|g| factor * signed_pow(g, p_star - 1.0))?;
        Ok(Self {
            kernel,
            dual,
            p_star,
            factor,
            samples,
        })
    }

    pub fn dual(&self) -> &DiracCombo {
        &self.dual
    }

    /// Values on the grid the solver worked on.
    pub fn samples(&self) -> &SampledFunction {
        &self.samples
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        self.samples.grid()
    }

    /// `(A u_n)(t)` with `u_n`'s grid refined at `t`.
    pub fn image_at(&self, t: f64) -> f64 {
        let g = self.grid();
        let bps = g.breakpoints();
        let per = g.points_per_cell();
        let rule = GaussLegendre::new(DEFAULT_QUADRATURE_ORDER);
        let mut total = 0.0;
        for (cell, w) in bps.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            if self.kernel.is_volterra() && a >= t {
                break;
            }
            if t > a && t < b {
                for (lo, hi) in [(a, t), (t, b)] {
                    if self.kernel.is_volterra() && lo >= t {
                        continue;
                    }
                    total += rule.integrate(lo, hi, |s| self.kernel.eval(t, s) * self.value(s));
                }
            } else {
                let range = cell * per..(cell + 1) * per;
                total += g.points()[range.clone()]
                    .iter()
                    .zip(&g.weights()[range.clone()])
                    .zip(&self.samples.values()[range])
                    .map(|((&s, &wt), &u)| wt * self.kernel.eval(t, s) * u)
                    .sum::<f64>();
            }
        }
        total
    }
}

impl Function1D for DualSolution {
    fn value(&self, s: f64) -> f64 {
        let g: f64 = self
            .dual
            .nodes()
            .iter()
            .zip(self.dual.weights())
            .map(|(&t, &w)| w * self.kernel.eval(t, s))
            .sum();
        self.factor * signed_pow(g, self.p_star - 1.0)
    }
}

#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if e == 1.0 {
        x
    } else {
        x.abs().powf(e) * x.signum()
    }
}

/// A computed approximation: a spline for collocation and least squares,
/// `J_{q*}(A* v_n)` for least error.
#[derive(Debug, Clone)]
pub enum Approximation {
    Spline(PiecewisePoly),
    Dual(DualSolution),
}

impl Approximation {
    pub fn as_spline(&self) -> Option<&PiecewisePoly> {
        match self {
            Self::Spline(p) => Some(p),
            Self::Dual(_) => None,
        }
    }

    pub fn as_dual(&self) -> Option<&DualSolution> {
        match self {
            Self::Spline(_) => None,
            Self::Dual(d) => Some(d),
        }
    }

    /// Values on `grid`.
    pub fn sample(&self, grid: Arc<QuadratureGrid>) -> Result<SampledFunction> {
        SampledFunction::from_fn(grid, self)
    }

    /// `||u_n||_{L^p}`, on the mesh grid for splines and the solver grid otherwise.
    pub fn lp_norm(&self, spec: &SpaceSpec) -> Result<f64> {
        match self {
            Self::Spline(p) => p.lp_norm(spec),
            Self::Dual(d) => spaces::lp_norm(d.samples(), spec),
        }
    }

    /// `(A u_n)(t)`.
    pub fn image_at(&self, kernel: &Kernel, t: f64) -> Result<f64> {
        match self {
            Self::Spline(p) => apply_a(kernel, p, t),
            Self::Dual(d) => Ok(d.image_at(t)),
        }
    }

    fn cells(&self) -> usize {
        match self {
            Self::Spline(p) => p.mesh().cells(),
            Self::Dual(d) => d.grid().breakpoints().len() - 1,
        }
    }
}

impl Function1D for Approximation {
    fn value(&self, t: f64) -> f64 {
        match self {
            Self::Spline(p) => p.value(t),
            Self::Dual(d) => d.value(t),
        }
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub solution: Approximation,
    /// `||A u_n - f^δ||` in `C[0,1]`, by dense sampling against the data the
    /// solver saw (the piecewise-linear interpolant of node data for
    /// collocation and least error, the sampled `f^δ` for least squares).
    pub residual_c: f64,
    /// Largest residual at the collocation nodes (quadrature points for least squares).
    pub residual_nodes: f64,
    /// Dual coefficients `v_n` (least error only).
    pub dual: Option<DiracCombo>,
    pub iterations: usize,
    pub converged: bool,
    pub condition_estimate: f64,
    pub warnings: Vec<String>,
    pub kernel: Kernel,
}

impl SolveResult {
    /// The spline coefficients, if the approximation is a spline.
    pub fn coeffs(&self) -> Option<&[f64]> {
        self.solution.as_spline().map(PiecewisePoly::coeffs)
    }
}

/// `||A u_n - f_ref||` in `C[0,1]` (dense sampling) or `L^r` (quadrature).
pub fn residual<F: Function1D + ?Sized>(result: &SolveResult, f_ref: &F, spec: &SpaceSpec) -> Result<f64> {
    let cells = result.solution.cells();
    let diff = |t: f64| -> f64 {
        result
            .solution
            .image_at(&result.kernel, t)
            .map(|v| v - f_ref.value(t))
            .unwrap_or(f64::NAN)
    };
    match spec.p() {
        Some(r) if r.is_finite() => {
            let grid = QuadratureGrid::uniform(cells, DEFAULT_QUADRATURE_ORDER);
            spaces::lp_norm_of(&diff, &grid, &SpaceSpec::lp(r)?)
        }
        _ => spaces::sup_norm_of(&diff, cells, DEFAULT_SUP_SAMPLES_PER_CELL),
    }
}

/// Piecewise-linear interpolant of values at increasing nodes, constant
/// outside the node range.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeInterpolant {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl NodeInterpolant {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("interpolation nodes must increase".into()));
        }
        crate::error::ensure_finite(&values)?;
        Ok(Self { nodes, values })
    }
}

impl Function1D for NodeInterpolant {
    fn value(&self, t: f64) -> f64 {
        let x = &self.nodes;
        match x.binary_search_by(|p| p.total_cmp(&t)) {
            Ok(i) => self.values[i],
            Err(0) => self.values[0],
            Err(i) if i == x.len() => self.values[x.len() - 1],
            Err(i) => {
                let w = (t - x[i - 1]) / (x[i] - x[i - 1]);
                (1.0 - w) * self.values[i - 1] + w * self.values[i]
            }
        }
    }
}

/// Dense sample points: `per_cell` equispaced points per cell of an `n`-cell
/// mesh, merged with `extra` points.
pub(crate) fn dense_points(n: usize, per_cell: usize, extra: &[f64]) -> Vec<f64> {
    let m = n * per_cell.max(1);
    let mut pts: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
    pts.extend_from_slice(extra);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

/// 2-norm condition number from singular values; `∞` when singular.
pub(crate) fn condition_number(m: &nalgebra::DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Systems beyond this condition number are reported as singular.
pub const MAX_CONDITION: f64 = 1e14;
