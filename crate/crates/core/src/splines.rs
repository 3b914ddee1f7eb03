//! Uniform meshes and the discontinuous piecewise-polynomial spaces
//! `S^(-1)_{k-1}`, represented in per-cell orthonormal Legendre bases.

use std::sync::Arc;

use crate::error::{ensure_finite, Error, Result};
use crate::function::Function1D;
use crate::quadrature::{GaussLegendre, QuadratureGrid};
use crate::spaces::{self, SampledFunction, SpaceSpec, DEFAULT_QUADRATURE_ORDER};

/// Uniform mesh of `[0, 1]` with `n` cells `[(i-1)h, ih]`, `h = 1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mesh {
    n: usize,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mesh needs at least one cell".into()));
        }
        Ok(Self { n })
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell `i` (0-based) as `(left, right)`.
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let n = self.n as f64;
        (i as f64 / n, (i + 1) as f64 / n)
    }

    /// The `n + 1` cell endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        (0..=self.n).map(|i| i as f64 / self.n as f64).collect()
    }

    /// Index of the cell owning `t`. Interior cell boundaries belong to the
    /// cell on their left; `t = 0` belongs to the first cell.
    pub fn cell_of(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let x = t * self.n as f64;
        let r = x.round();
        let idx = if r >= 1.0 && (x - r).abs() <= 1e-12 * x.max(1.0) {
            r as usize - 1
        } else {
            x.floor() as usize
        };
        idx.min(self.n - 1)
    }

    /// Dyadic refinement, `n -> 2n`. Every endpoint `i/n` is again an endpoint.
    pub fn refine_nested(&self) -> Self {
        Self { n: 2 * self.n }
    }

    /// Composite Gauss grid with `order` points per cell.
    pub fn quadrature_grid(&self, order: usize) -> QuadratureGrid {
        QuadratureGrid::uniform(self.n, order)
    }
}

/// A polynomial in monomial form, `Σ c_i s^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }
}

/// Value of the orthonormal basis function `j` of a cell `[a, a + h]` at `s`.
///
/// `φ_j(s) = sqrt((2j+1)/h) P_j(2(s-a)/h - 1)`.
#[inline]
pub(crate) fn basis_value(a: f64, h: f64, j: usize, s: f64) -> f64 {
    let x = 2.0 * (s - a) / h - 1.0;
    ((2 * j + 1) as f64 / h).sqrt() * legendre(j, x)
}

/// All `k` basis values of a cell at `s`.
#[inline]
pub(crate) fn basis_values(a: f64, h: f64, k: usize, s: f64, out: &mut [f64]) {
    let x = 2.0 * (s - a) / h - 1.0;
    let mut p0 = 1.0;
    let mut p1 = x;
    for (j, slot) in out.iter_mut().enumerate().take(k) {
        let pj = match j {
            0 => 1.0,
            1 => x,
            _ => {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
                p2
            }
        };
        *slot = ((2 * j + 1) as f64 / h).sqrt() * pj;
    }
}

fn legendre(j: usize, x: f64) -> f64 {
    match j {
        0 => 1.0,
        1 => x,
        _ => crate::quadrature::legendre_with_derivative(j, x).0,
    }
}

/// The `k` polynomials of an `L^2(a, b)`-orthonormal basis of `Π_{k-1}`
/// (scaled, shifted Legendre polynomials), in monomial form in `s`.
pub fn orthonormal_basis(a: f64, b: f64, k: usize) -> Result<Vec<Polynomial>> {
    if k < 1 {
        return Err(Error::Domain("basis order k must be >= 1".into()));
    }
    if !(b > a) {
        return Err(Error::Domain(format!("empty cell [{a}, {b}]")));
    }
    // Legendre polynomials in x, then substitute x = alpha s + beta.
    let mut in_x: Vec<Vec<f64>> = vec![vec![1.0], vec![0.0, 1.0]];
    for j in 2..k {
        let jf = j as f64;
        let mut next = vec![0.0; j + 1];
        for (i, c) in in_x[j - 1].iter().enumerate() {
            next[i + 1] += (2.0 * jf - 1.0) / jf * c;
        }
        for (i, c) in in_x[j - 2].iter().enumerate() {
            next[i] -= (jf - 1.0) / jf * c;
        }
        in_x.push(next);
    }
    let h = b - a;
    let alpha = 2.0 / h;
    let beta = -2.0 * a / h - 1.0;
    let out = (0..k)
        .map(|j| {
            let mut coeffs = vec![0.0; j + 1];
            // (alpha s + beta)^m expanded by the binomial theorem
            for (m, c) in in_x[j].iter().enumerate() {
                let mut binom = 1.0;
                for i in 0..=m {
                    coeffs[i] += c * binom * alpha.powi(i as i32) * beta.powi((m - i) as i32);
                    binom = binom * (m - i) as f64 / (i + 1) as f64;
                }
            }
            let norm = ((2 * j + 1) as f64 / h).sqrt();
            Polynomial {
                coeffs: coeffs.into_iter().map(|c| c * norm).collect(),
            }
        })
        .collect();
    Ok(out)
}

/// Element of `S^(-1)_{k-1}`: on each mesh cell a polynomial of degree
/// `<= k - 1`, stored as `k` coefficients per cell in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    mesh: Mesh,
    k: usize,
    coeffs: Vec<f64>,
}

impl PiecewisePoly {
    /// Coefficients are cell-major: `coeffs[i * k + j]` multiplies `φ_j` on cell `i`.
    pub fn new(mesh: Mesh, k: usize, coeffs: Vec<f64>) -> Result<Self> {
        if k < 1 {
            return Err(Error::Domain("polynomial order k must be >= 1".into()));
        }
        if coeffs.len() != mesh.cells() * k {
            return Err(Error::Dimension(format!(
                "expected {} coefficients, got {}",
                mesh.cells() * k,
                coeffs.len()
            )));
        }
        ensure_finite(&coeffs)?;
        Ok(Self { mesh, k, coeffs })
    }

    pub fn zeros(mesh: Mesh, k: usize) -> Result<Self> {
        Self::new(mesh, k, vec![0.0; mesh.cells() * k])
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn cell_coeffs(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.k..(i + 1) * self.k]
    }

    /// Value at `t ∈ [0, 1]`, left limit at interior cell boundaries.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("t = {t} outside [0, 1]")));
        }
        let i = self.mesh.cell_of(t);
        Ok(self.eval_in_cell(i, t))
    }

    /// Value of cell `i`'s polynomial at `s` (which may lie outside the cell).
    pub fn eval_in_cell(&self, i: usize, s: f64) -> f64 {
        let (a, _) = self.mesh.cell(i);
        let h = self.mesh.h();
        let mut phi = [0.0; 32];
        if self.k <= phi.len() {
            basis_values(a, h, self.k, s, &mut phi);
            self.cell_coeffs(i)
                .iter()
                .zip(&phi)
                .map(|(c, p)| c * p)
                .sum()
        } else {
            self.cell_coeffs(i)
                .iter()
                .enumerate()
                .map(|(j, c)| c * basis_value(a, h, j, s))
                .sum()
        }
    }

    /// Cell-wise derivative (order `k - 1`; the zero function of order 1 when `k = 1`).
    pub fn derivative(&self) -> Self {
        let k = self.k;
        let h = self.mesh.h();
        if k == 1 {
            return Self::zeros(self.mesh, 1).expect("valid mesh");
        }
        let mut out = Vec::with_capacity(self.mesh.cells() * (k - 1));
        for i in 0..self.mesh.cells() {
            let c = self.cell_coeffs(i);
            for a in 0..k - 1 {
                let mut d = 0.0;
                let mut b = a + 1;
                while b < k {
                    d += (((2 * a + 1) * (2 * b + 1)) as f64).sqrt() * c[b];
                    b += 2;
                }
                out.push(2.0 / h * d);
            }
        }
        Self::new(self.mesh, k - 1, out).expect("finite coefficients")
    }

    /// Values at the points of `grid`.
    pub fn sample(&self, grid: Arc<QuadratureGrid>) -> Result<SampledFunction> {
        SampledFunction::from_fn(grid, self)
    }

    /// `||self||_{L^p}` with the default per-cell Gauss rule.
    pub fn lp_norm(&self, spec: &SpaceSpec) -> Result<f64> {
        spaces::lp_norm_of(self, &self.mesh.quadrature_grid(DEFAULT_QUADRATURE_ORDER), spec)
    }
}

impl Function1D for PiecewisePoly {
    fn value(&self, t: f64) -> f64 {
        self.eval(t).unwrap_or(f64::NAN)
    }
}

/// Cell-wise `L^2` projection `P_n`: `(P_n f)|_cell = Σ_j (∫_cell φ_j f) φ_j`,
/// integrals by an `order`-point Gauss rule per cell.
pub fn project_with_order<F: Function1D + ?Sized>(
    f: &F,
    mesh: Mesh,
    k: usize,
    order: usize,
) -> Result<PiecewisePoly> {
    if k < 1 {
        return Err(Error::Domain("polynomial order k must be >= 1".into()));
    }
    let rule = GaussLegendre::new(order.max(k));
    let h = mesh.h();
    let mut coeffs = vec![0.0; mesh.cells() * k];
    let mut phi = vec![0.0; k];
    for i in 0..mesh.cells() {
        let (a, b) = mesh.cell(i);
        for (s, w) in rule.on_interval(a, b) {
            let v = f.value(s);
            if !v.is_finite() {
                return Err(Error::NonFinite);
            }
            basis_values(a, h, k, s, &mut phi);
            for j in 0..k {
                coeffs[i * k + j] += w * v * phi[j];
            }
        }
    }
    PiecewisePoly::new(mesh, k, coeffs)
}

/// [`project_with_order`] with the default quadrature order.
pub fn project_pn<F: Function1D + ?Sized>(f: &F, mesh: Mesh, k: usize) -> Result<PiecewisePoly> {
    project_with_order(f, mesh, k, DEFAULT_QUADRATURE_ORDER)
}
