//! Norms, duality mappings and Bregman distances on `L^p(0,1)` and `C[0,1]`.
//!
//! Functions are carried as [`SampledFunction`]s: values on the points of a
//! [`QuadratureGrid`]. Every integral is the grid's quadrature sum, so the
//! pointwise maps below (duality mapping and its inverse) are exact on the
//! grid and identities such as `<J_q(w), w> = ||w||^q` hold to rounding.

use std::sync::Arc;

use crate::error::{ensure_finite, Error, Result};
use crate::function::Function1D;
use crate::quadrature::QuadratureGrid;

/// Default number of Gauss points per mesh cell for norm quadrature.
pub const DEFAULT_QUADRATURE_ORDER: usize = 16;

/// Default number of sup-norm samples per mesh cell.
pub const DEFAULT_SUP_SAMPLES_PER_CELL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Lp { p: f64, q: f64 },
    C,
}

/// A function space on `(0, 1)`: `L^p` with the power `q` used for its
/// duality mapping `J_q = ∂(1/q ||·||^q)`, or `C[0,1]`.
///
/// `SpaceSpec::lp(p)` uses `q = max(2, p)`. Dual spaces built with
/// [`SpaceSpec::dual`] carry the conjugate pair `(p*, q*)` instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceSpec {
    kind: Kind,
}

impl SpaceSpec {
    /// `L^p(0,1)` with `1 <= p <= ∞`.
    ///
    /// `p = 1` and `p = ∞` are accepted for norm evaluation only; duality
    /// mappings and Bregman distances require `1 < p < ∞`.
    pub fn lp(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::Domain(format!("L^p exponent must be >= 1, got {p}")));
        }
        Ok(Self {
            kind: Kind::Lp {
                p,
                q: p.max(2.0),
            },
        })
    }

    /// `L^p` with an explicit duality power `q > 1`.
    pub fn lp_with_power(p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
            return Err(Error::Domain(format!("need 1 < p, q < ∞, got p={p}, q={q}")));
        }
        Ok(Self {
            kind: Kind::Lp { p, q },
        })
    }

    /// `C[0,1]` with the sup norm.
    pub fn c() -> Self {
        Self { kind: Kind::C }
    }

    pub fn is_c(&self) -> bool {
        matches!(self.kind, Kind::C)
    }

    /// The Lebesgue exponent, `None` for `C[0,1]`.
    pub fn p(&self) -> Option<f64> {
        match self.kind {
            Kind::Lp { p, .. } => Some(p),
            Kind::C => None,
        }
    }

    /// True for `L^p` with `1 < p < ∞`, where `J_q` is single valued and invertible.
    pub fn is_smooth_lp(&self) -> bool {
        matches!(self.kind, Kind::Lp { p, .. } if p > 1.0 && p.is_finite())
    }

    fn smooth_pair(&self) -> Result<(f64, f64)> {
        match self.kind {
            Kind::Lp { p, q } if p > 1.0 && p.is_finite() => Ok((p, q)),
            _ => Err(Error::Domain(
                "duality mappings need L^p with 1 < p < ∞".to_string(),
            )),
        }
    }

    /// Duality power `q`.
    pub fn q(&self) -> Result<f64> {
        self.smooth_pair().map(|(_, q)| q)
    }

    /// Conjugate power `q* = q / (q - 1)`.
    pub fn q_star(&self) -> Result<f64> {
        self.q().map(conjugate)
    }

    /// The dual space `L^{p*}` carrying the power `q*`.
    pub fn dual(&self) -> Result<Self> {
        let (p, q) = self.smooth_pair()?;
        Self::lp_with_power(conjugate(p), conjugate(q))
    }
}

/// Hölder conjugate `x / (x - 1)`.
pub fn conjugate(x: f64) -> f64 {
    x / (x - 1.0)
}

/// Values of a function on the points of a quadrature grid.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<QuadratureGrid>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        ensure_finite(&values)?;
        Ok(Self { grid, values })
    }

    /// Samples `f` at the grid points.
    pub fn from_fn<F: Function1D + ?Sized>(grid: Arc<QuadratureGrid>, f: &F) -> Result<Self> {
        let values = grid.points().iter().map(|&t| f.value(t)).collect();
        Self::new(grid, values)
    }

    /// Uniform sampling with `m` points including both endpoints, trapezoidal weights.
    pub fn uniform<F: Function1D + ?Sized>(m: usize, f: &F) -> Result<Self> {
        let grid = Arc::new(QuadratureGrid::uniform_trapezoid(m));
        Self::from_fn(grid, f)
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn points(&self) -> &[f64] {
        self.grid.points()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `op` pointwise, keeping the grid.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| op(v)).collect())
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_grid(self, other)?;
        Self::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        self.map(|v| factor * v)
    }

    /// Piecewise-linear interpolation between grid points, constant outside.
    pub fn interpolate(&self, t: f64) -> f64 {
        let x = self.grid.points();
        match x.binary_search_by(|probe| probe.total_cmp(&t)) {
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

impl Function1D for SampledFunction {
    fn value(&self, t: f64) -> f64 {
        self.interpolate(t)
    }
}

fn same_grid(a: &SampledFunction, b: &SampledFunction) -> Result<()> {
    if Arc::ptr_eq(&a.grid, &b.grid) || a.grid.points() == b.grid.points() {
        Ok(())
    } else {
        Err(Error::Dimension("functions live on different grids".into()))
    }
}

/// `∫ a b` on the shared grid.
pub fn pairing(a: &SampledFunction, b: &SampledFunction) -> Result<f64> {
    same_grid(a, b)?;
    Ok(a.grid
        .weights()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .map(|(w, (x, y))| w * x * y)
        .sum())
}

fn lp_sum(weights: &[f64], values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p == 1.0 {
        weights.iter().zip(values).map(|(w, v)| w * v.abs()).sum()
    } else if p == 2.0 {
        weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v * v)
            .sum::<f64>()
            .sqrt()
    } else {
        weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// `||f||_{L^p}` by the grid's quadrature; `p = ∞` and `C[0,1]` fall back to
/// [`sup_norm`].
pub fn lp_norm(f: &SampledFunction, spec: &SpaceSpec) -> Result<f64> {
    ensure_finite(&f.values)?;
    match spec.p() {
        Some(p) if p.is_finite() => Ok(lp_sum(f.grid.weights(), f.values.iter().copied(), p)),
        _ => sup_norm(f),
    }
}

/// `||f||_{L^p}` of a pointwise-defined function on a grid.
pub fn lp_norm_of<F: Function1D + ?Sized>(
    f: &F,
    grid: &QuadratureGrid,
    spec: &SpaceSpec,
) -> Result<f64> {
    let values: Vec<f64> = grid.points().iter().map(|&t| f.value(t)).collect();
    ensure_finite(&values)?;
    match spec.p() {
        Some(p) if p.is_finite() => Ok(lp_sum(grid.weights(), values.into_iter(), p)),
        _ => values
            .iter()
            .map(|v| v.abs())
            .reduce(f64::max)
            .ok_or(Error::EmptyGrid),
    }
}

/// `max |f|` over the samples.
///
/// For a continuous function this is a lower bound of the sup norm that
/// converges as the sampling is refined.
pub fn sup_norm(f: &SampledFunction) -> Result<f64> {
    ensure_finite(&f.values)?;
    f.values
        .iter()
        .map(|v| v.abs())
        .reduce(f64::max)
        .ok_or(Error::EmptyGrid)
}

/// Sup norm of `f` sampled at `samples_per_cell` equispaced points on each
/// of `cells` uniform cells (endpoints included).
pub fn sup_norm_of<F: Function1D + ?Sized>(f: &F, cells: usize, samples_per_cell: usize) -> Result<f64> {
    let m = cells * samples_per_cell.max(1);
    if m == 0 {
        return Err(Error::EmptyGrid);
    }
    let mut best = 0.0f64;
    for i in 0..=m {
        let v = f.value(i as f64 / m as f64);
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        best = best.max(v.abs());
    }
    Ok(best)
}

/// `x ↦ ||w||^{q-p} |x|^{p-1} sign(x)` given the norm.
fn duality_pointwise(norm: f64, p: f64, q: f64) -> impl Fn(f64) -> f64 {
    let scale = if q == p { 1.0 } else { norm.powf(q - p) };
    move |x: f64| {
        if x == 0.0 {
            0.0
        } else if p == 2.0 {
            scale * x
        } else {
            scale * x.abs().powf(p - 1.0) * x.signum()
        }
    }
}

/// The duality mapping `J_q(w) = ||w||^{q-p} |w|^{p-1} sign(w)` of `L^p`.
pub fn duality_map(w: &SampledFunction, spec: &SpaceSpec) -> Result<SampledFunction> {
    let (p, q) = spec.smooth_pair()?;
    let norm = lp_norm(w, spec)?;
    w.map(duality_pointwise(norm, p, q))
}

/// `J_q^{-1} = J_{q*}` of the dual space `L^{p*}`.
pub fn duality_map_inverse(z: &SampledFunction, spec: &SpaceSpec) -> Result<SampledFunction> {
    duality_map(z, &spec.dual()?)
}

/// `D_q(ũ, u) = 1/q ||ũ||^q - 1/q ||u||^q + <J_q(u), u - ũ>`.
pub fn bregman_distance(
    u_tilde: &SampledFunction,
    u: &SampledFunction,
    spec: &SpaceSpec,
) -> Result<f64> {
    let q = spec.q()?;
    let ju = duality_map(u, spec)?;
    let diff = u.sub(u_tilde)?;
    let d = (lp_norm(u_tilde, spec)?.powf(q) - lp_norm(u, spec)?.powf(q)) / q
        + pairing(&ju, &diff)?;
    // rounding
    Ok(d.max(0.0))
}

/// `D^sym(ũ, u) = <J_q(u) - J_q(ũ), u - ũ>`.
pub fn bregman_symmetric(
    u_tilde: &SampledFunction,
    u: &SampledFunction,
    spec: &SpaceSpec,
) -> Result<f64> {
    let ju = duality_map(u, spec)?;
    let jt = duality_map(u_tilde, spec)?;
    pairing(&ju.sub(&jt)?, &u.sub(u_tilde)?)
}
