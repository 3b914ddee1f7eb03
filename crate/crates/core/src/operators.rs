//! Integral operators `(Au)(t) = ∫_0^1 K(t,s) u(s) ds`, collocation schemes,
//! point-functional combinations and the model right-hand side.

use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{ensure_finite, Error, Result};
use crate::function::Function1D;
use crate::quadrature::{GaussLegendre, QuadratureGrid};
use crate::spaces::SampledFunction;
use crate::splines::{basis_values, Mesh, PiecewisePoly};

/// Kernel sampled on a tensor grid, bilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    ts: Vec<f64>,
    ss: Vec<f64>,
    /// `values[i * ss.len() + j] = K(ts[i], ss[j])`
    values: Vec<f64>,
}

impl TabulatedKernel {
    pub fn new(ts: Vec<f64>, ss: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() < 2 || ss.len() < 2 {
            return Err(Error::Domain("tabulated kernel needs at least a 2x2 grid".into()));
        }
        if ts.windows(2).any(|w| w[0] >= w[1]) || ss.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("kernel table axes must be strictly increasing".into()));
        }
        if values.len() != ts.len() * ss.len() {
            return Err(Error::Dimension(format!(
                "kernel table has {} values for a {}x{} grid",
                values.len(),
                ts.len(),
                ss.len()
            )));
        }
        ensure_finite(&values)?;
        Ok(Self { ts, ss, values })
    }

    /// Reads `(t, s, K)` triples. A non-numeric first line is taken as a header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut triples = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 3 {
                return Err(Error::Config(format!(
                    "kernel table line {}: expected 3 fields",
                    line + 1
                )));
            }
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => triples.push((v[0], v[1], v[2])),
                Err(_) if line == 0 => continue,
                Err(e) => {
                    return Err(Error::Config(format!("kernel table line {}: {e}", line + 1)))
                }
            }
        }
        let mut ts: Vec<f64> = triples.iter().map(|x| x.0).collect();
        let mut ss: Vec<f64> = triples.iter().map(|x| x.1).collect();
        for axis in [&mut ts, &mut ss] {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        if ts.len() * ss.len() != triples.len() {
            return Err(Error::Config("kernel table is not a full tensor grid".into()));
        }
        let mut values = vec![f64::NAN; ts.len() * ss.len()];
        for (t, s, k) in triples {
            let i = ts.binary_search_by(|x| x.total_cmp(&t)).expect("present");
            let j = ss.binary_search_by(|x| x.total_cmp(&s)).expect("present");
            values[i * ss.len() + j] = k;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Config("kernel table has duplicate entries".into()));
        }
        Self::new(ts, ss, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn s_points(&self) -> &[f64] {
        &self.ss
    }

    fn locate(axis: &[f64], x: f64) -> (usize, f64) {
        let x = x.clamp(axis[0], axis[axis.len() - 1]);
        let i = match axis.binary_search_by(|p| p.total_cmp(&x)) {
            Ok(i) => i.min(axis.len() - 2),
            Err(i) => i - 1,
        };
        (i, (x - axis[i]) / (axis[i + 1] - axis[i]))
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        let (i, a) = Self::locate(&self.ts, t);
        let (j, b) = Self::locate(&self.ss, s);
        let m = self.ss.len();
        let v = |ii: usize, jj: usize| self.values[ii * m + jj];
        (1.0 - a) * ((1.0 - b) * v(i, j) + b * v(i, j + 1))
            + a * ((1.0 - b) * v(i + 1, j) + b * v(i + 1, j + 1))
    }

    fn max_spacing(&self) -> f64 {
        self.ts
            .windows(2)
            .chain(self.ss.windows(2))
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// Kernel of the integral operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `K(t,s) = (t-s)^{l-1}` for `s <= t`, zero otherwise. With `normalized`
    /// the kernel is divided by `(l-1)!`, giving the Green's function of `D^l`
    /// with zero initial conditions.
    VolterraPower { l: u32, normalized: bool },
    /// Green's function of `D^2` with `f(0) = f(1) = 0`:
    /// `K(t,s) = s(t-1)` for `s < t`, `t(s-1)` otherwise.
    GreenD2,
    /// Green's function of `D^4` with `f = f' = 0` at both ends:
    /// `K(t,s) = -s²(1-t)²(s+2st-3t)/6` for `s < t`, mirrored otherwise.
    GreenD4,
    Tabulated(TabulatedKernel),
}

fn green_d4_lower(t: f64, s: f64) -> f64 {
    -s * s * (1.0 - t) * (1.0 - t) * (s + 2.0 * s * t - 3.0 * t) / 6.0
}

impl Kernel {
    /// The model kernel `(t-s)^{l-1}`.
    pub fn volterra(l: u32) -> Result<Self> {
        if l < 1 {
            return Err(Error::Domain("kernel order l must be >= 1".into()));
        }
        Ok(Self::VolterraPower {
            l,
            normalized: false,
        })
    }

    pub fn eval(&self, t: f64, s: f64) -> f64 {
        match self {
            Self::VolterraPower { l, normalized } => {
                if s > t {
                    return 0.0;
                }
                let v = (t - s).powi(*l as i32 - 1);
                if *normalized {
                    v / factorial(*l - 1)
                } else {
                    v
                }
            }
            Self::GreenD2 => {
                if s < t {
                    s * (t - 1.0)
                } else {
                    t * (s - 1.0)
                }
            }
            Self::GreenD4 => {
                if s < t {
                    green_d4_lower(t, s)
                } else {
                    green_d4_lower(s, t)
                }
            }
            Self::Tabulated(tab) => tab.eval(t, s),
        }
    }

    pub fn is_volterra(&self) -> bool {
        matches!(self, Self::VolterraPower { .. })
    }

    /// Smoothing order `l` where known (the kernel is a Green's function of `D^l`).
    pub fn order(&self) -> Option<u32> {
        match self {
            Self::VolterraPower { l, .. } => Some(*l),
            Self::GreenD2 => Some(2),
            Self::GreenD4 => Some(4),
            Self::Tabulated(_) => None,
        }
    }

    /// Polynomial degree in `s` of each smooth piece.
    fn s_degree(&self) -> usize {
        match self {
            Self::VolterraPower { l, .. } => *l as usize - 1,
            Self::GreenD2 => 1,
            Self::GreenD4 => 3,
            // bilinear between table points
            Self::Tabulated(_) => 1,
        }
    }

    /// Upper end of the support in `s` for fixed `t`.
    fn support_end(&self, t: f64) -> f64 {
        if self.is_volterra() {
            t
        } else {
            1.0
        }
    }

    /// Interior points in `s` where the kernel is not smooth, besides `t`.
    fn extra_breaks(&self) -> &[f64] {
        match self {
            Self::Tabulated(tab) => tab.s_points(),
            _ => &[],
        }
    }

    /// A warning if the kernel table is coarser than the mesh.
    pub fn resolution_warning(&self, mesh: Mesh) -> Option<String> {
        match self {
            Self::Tabulated(tab) if tab.max_spacing() > mesh.h() * (1.0 + 1e-12) => Some(format!(
                "kernel table spacing {:.3e} is coarser than mesh width {:.3e}",
                tab.max_spacing(),
                mesh.h()
            )),
            _ => None,
        }
    }

    /// `∫_a^b K(t,s) g(s) ds` for `g` a polynomial of degree `<= g_degree` on
    /// `[a, b]`, splitting at `t` and the kernel's break points so every piece
    /// is integrated exactly.
    fn integrate_poly_segment<G: FnMut(f64) -> f64>(
        &self,
        t: f64,
        a: f64,
        b: f64,
        g_degree: usize,
        mut g: G,
    ) -> f64 {
        let b = b.min(self.support_end(t));
        if b <= a {
            return 0.0;
        }
        let rule = GaussLegendre::exact_for_degree(g_degree + self.s_degree());
        let mut cuts = vec![a];
        if t > a && t < b {
            cuts.push(t);
        }
        cuts.extend(self.extra_breaks().iter().copied().filter(|&x| x > a && x < b));
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            // evaluate the piece's own polynomial branch away from the cut
            total += rule.integrate(w[0], w[1], |s| self.eval(t, s) * g(s));
        }
        total
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// `(Au)(t)` for a spline `u`, exact up to rounding for polynomial kernels.
pub fn apply_a(kernel: &Kernel, u: &PiecewisePoly, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    let mesh = u.mesh();
    let k = u.k();
    let mut total = 0.0;
    for i in 0..mesh.cells() {
        let (a, b) = mesh.cell(i);
        if kernel.is_volterra() && a >= t {
            break;
        }
        total += kernel.integrate_poly_segment(t, a, b, k - 1, |s| u.eval_in_cell(i, s));
    }
    Ok(total)
}

/// `(Au)(t)` by the quadrature of `u`'s grid: `Σ w_i K(t, s_i) u(s_i)`.
///
/// Accurate when `t` and the kernel's break points are grid breakpoints.
pub fn apply_a_sampled(kernel: &Kernel, u: &SampledFunction, t: f64) -> f64 {
    let g = u.grid();
    let end = kernel.support_end(t);
    g.points()
        .iter()
        .zip(g.weights())
        .zip(u.values())
        .take_while(|((&s, _), _)| s <= end)
        .map(|((&s, &w), &v)| w * kernel.eval(t, s) * v)
        .sum()
}

/// `(Af)(t)` for a general function by composite Gauss quadrature, graded
/// towards `s = 0` to resolve endpoint singularities such as `s^{1/2}`.
pub fn apply_a_function<F: Function1D + ?Sized>(kernel: &Kernel, f: &F, t: f64) -> f64 {
    let end = kernel.support_end(t);
    let mut bps = vec![t, end];
    bps.extend_from_slice(kernel.extra_breaks());
    let grid = QuadratureGrid::graded_at_zero(&bps, 20, 50);
    grid.integrate(|s| {
        if s > end {
            0.0
        } else {
            kernel.eval(t, s) * f.value(s)
        }
    })
}

/// Collocation parameters `0 < c_1 < ... < c_k <= 1` on a mesh; nodes
/// `t_{i,j} = (i - 1 + c_j) h`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationScheme {
    mesh: Mesh,
    c: Vec<f64>,
}

impl CollocationScheme {
    pub fn new(mesh: Mesh, c: Vec<f64>) -> Result<Self> {
        validate_parameters(&c)?;
        Ok(Self { mesh, c })
    }

    /// Two nodes per cell, `(i - 1 + c) h` and `i h`.
    pub fn with_endpoint(mesh: Mesh, c: f64) -> Result<Self> {
        Self::new(mesh, vec![c, 1.0])
    }

    /// One node per cell at its right endpoint. These node sets nest under
    /// dyadic refinement.
    pub fn endpoint(mesh: Mesh) -> Self {
        Self {
            mesh,
            c: vec![1.0],
        }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn params(&self) -> &[f64] {
        &self.c
    }

    /// Nodes per cell.
    pub fn k(&self) -> usize {
        self.c.len()
    }

    pub fn len(&self) -> usize {
        self.mesh.cells() * self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All nodes, cell by cell, increasing.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.mesh.h();
        (0..self.mesh.cells())
            .flat_map(|i| self.c.iter().map(move |cj| (i as f64 + cj) * h))
            .collect()
    }

    /// The same parameters on `n' = 2n` cells.
    pub fn refine_nested(&self) -> Self {
        Self {
            mesh: self.mesh.refine_nested(),
            c: self.c.clone(),
        }
    }
}

pub(crate) fn validate_parameters(c: &[f64]) -> Result<()> {
    if c.is_empty() {
        return Err(Error::Domain("need at least one collocation parameter".into()));
    }
    if c.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(Error::Domain(format!("collocation parameters must lie in (0, 1]: {c:?}")));
    }
    if c.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "collocation parameters must be strictly increasing: {c:?}"
        )));
    }
    Ok(())
}

/// The matrix of `A` from the spline space `S_{trial_k - 1}` on the scheme's
/// mesh to values at the scheme's nodes. Rows follow [`CollocationScheme::nodes`],
/// columns the cell-major basis of [`PiecewisePoly`].
pub fn collocation_matrix(kernel: &Kernel, scheme: &CollocationScheme, trial_k: usize) -> DMatrix<f64> {
    let nodes = scheme.nodes();
    point_matrix(kernel, scheme.mesh(), trial_k, &nodes)
}

/// Rows `(A φ)(t)` for arbitrary evaluation points `t`.
pub fn point_matrix(kernel: &Kernel, mesh: Mesh, trial_k: usize, points: &[f64]) -> DMatrix<f64> {
    let n = mesh.cells();
    let h = mesh.h();
    let mut m = DMatrix::zeros(points.len(), n * trial_k);
    let mut phi = vec![0.0; trial_k];
    for (row, &t) in points.iter().enumerate() {
        for i in 0..n {
            let (a, b) = mesh.cell(i);
            if kernel.is_volterra() && a >= t {
                break;
            }
            for j in 0..trial_k {
                let v = kernel.integrate_poly_segment(t, a, b, trial_k - 1, |s| {
                    basis_values(a, h, trial_k, s, &mut phi);
                    phi[j]
                });
                m[(row, i * trial_k + j)] = v;
            }
        }
    }
    m
}

/// A finite combination `z = Σ λ_j δ_{t_j}` of point evaluations, an element
/// of `C[0,1]*` with norm `Σ |λ_j|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracCombo {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl DiracCombo {
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            )));
        }
        ensure_finite(&nodes)?;
        ensure_finite(&weights)?;
        let mut sorted = nodes.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("Dirac nodes must be distinct".into()));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total variation `Σ |λ_j|`.
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// `<z, f> = Σ λ_j f(t_j)`.
    pub fn pair<F: Function1D + ?Sized>(&self, f: &F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f.value(t))
            .sum()
    }

    /// `Σ λ_j y_j` for values given at the nodes.
    pub fn pair_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.weights.len() {
            return Err(Error::Dimension("one value per node expected".into()));
        }
        Ok(self.weights.iter().zip(values).map(|(w, y)| w * y).sum())
    }

    /// Rewrites `self` over a superset of nodes (zero weights elsewhere).
    /// Fails if a node has no match within `1e-12`.
    pub fn embed_into(&self, nodes: &[f64]) -> Result<Self> {
        let mut weights = vec![0.0; nodes.len()];
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let j = nodes
                .iter()
                .position(|&x| (x - t).abs() <= 1e-12)
                .ok_or_else(|| Error::Domain(format!("node {t} missing from the finer set")))?;
            weights[j] += w;
        }
        Self::new(nodes.to_vec(), weights)
    }

    /// `self - other` on identical node lists.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.nodes != other.nodes {
            return Err(Error::Dimension("Dirac combinations on different nodes".into()));
        }
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a - b)
            .collect();
        Self::new(self.nodes.clone(), w)
    }
}

/// `(A* z)(s) = Σ λ_j K(t_j, s)`.
pub fn adjoint_apply(kernel: &Kernel, z: &DiracCombo, s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("s = {s} outside [0, 1]")));
    }
    Ok(z.nodes
        .iter()
        .zip(&z.weights)
        .map(|(&t, &w)| w * kernel.eval(t, s))
        .sum())
}

/// `A* z` sampled on a grid.
pub fn adjoint_sampled(
    kernel: &Kernel,
    z: &DiracCombo,
    grid: std::sync::Arc<QuadratureGrid>,
) -> Result<SampledFunction> {
    let values = grid
        .points()
        .iter()
        .map(|&s| adjoint_apply(kernel, z, s))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(grid, values)
}

/// `B(a, l) = Γ(a)Γ(l)/Γ(a+l)` for integer `l >= 1`.
fn beta_int(a: f64, l: u32) -> f64 {
    let mut b = factorial(l - 1);
    for j in 0..l {
        b /= a + f64::from(j);
    }
    b
}

/// `f(t) = ∫_0^t (t-s)^{l-1} s^r ds = t^{r+l} B(r+1, l)`.
pub fn model_rhs(r: f64, l: u32, t: f64) -> Result<f64> {
    if !(r > -1.0) {
        return Err(Error::Domain(format!("exponent r must exceed -1, got {r}")));
    }
    if l < 1 {
        return Err(Error::Domain("kernel order l must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t.powf(r + f64::from(l)) * beta_int(r + 1.0, l))
}
