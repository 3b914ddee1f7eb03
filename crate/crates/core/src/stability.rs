//! Stability constants of the discrete problems: `κ_n`, `τ_n`, `κ̃_n`, `κ_n*`.
//!
//! Away from the Hilbert case these are suprema of nonconvex ratios, so the
//! estimates are lower bounds found by a seeded search. Each search consumes
//! one deterministic random stream in order, so a larger budget extends a
//! smaller one and the estimate can only grow.

use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::noise::standard_normals;
use crate::operators::{collocation_matrix, point_matrix, CollocationScheme, Kernel};
use crate::quadrature::QuadratureGrid;
use crate::solvers::{condition_number, dense_points, MAX_CONDITION};
use crate::spaces::{SpaceSpec, DEFAULT_QUADRATURE_ORDER, DEFAULT_SUP_SAMPLES_PER_CELL};
use crate::splines::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed form (smallest singular value, exact row sums, vertex enumeration).
    Exact,
    /// Lower bound from seeded random search with coordinate refinement.
    RandomSearch,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::RandomSearch => "random_search",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub method: Method,
    /// Maximizing argument (coefficients, node values or weights).
    pub argmax: Vec<f64>,
}

/// Weighted `L^p` norm (`p = ∞`: max) of a vector of samples.
fn sampled_norm(values: &[f64], weights: &[f64], p: Option<f64>) -> f64 {
    match p {
        Some(p) if p.is_finite() => {
            if p == 2.0 {
                values.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt()
            } else {
                values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * v.abs().powf(p))
                    .sum::<f64>()
                    .powf(1.0 / p)
            }
        }
        _ => values.iter().fold(0.0, |a, v| a.max(v.abs())),
    }
}

/// Maximizes `f` over directions in `R^dim` from a single random stream:
/// every fifth evaluation refines the incumbent along one coordinate, the
/// other four are fresh Gaussian directions. `starts` are evaluated first.
pub(crate) fn random_search<F: FnMut(&[f64]) -> f64>(
    dim: usize,
    budget: usize,
    seed: u64,
    starts: &[Vec<f64>],
    mut f: F,
) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = f64::NEG_INFINITY;
    let mut arg = vec![0.0; dim];
    for s in starts {
        let v = f(s);
        if v > best {
            best = v;
            arg = s.clone();
        }
    }
    let mut coord = 0;
    let mut step = 0.5;
    for i in 0..budget {
        if i % 5 == 4 && best.is_finite() {
            let scale = arg.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
            let sign = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
            let mut cand = arg.clone();
            cand[coord] += sign * step * scale;
            let v = f(&cand);
            if v > best {
                best = v;
                arg = cand;
            } else {
                step *= 0.7;
                if step < 1e-6 {
                    step = 0.5;
                }
            }
            coord = (coord + 1) % dim;
        } else {
            let cand = standard_normals(&mut rng, dim);
            let v = f(&cand);
            if v > best {
                best = v;
                arg = cand;
            }
        }
    }
    (best, arg)
}

/// `A` at the points of a quadrature grid of the mesh.
fn image_on_grid(kernel: &Kernel, mesh: Mesh, trial_k: usize) -> (DMatrix<f64>, QuadratureGrid) {
    let grid = mesh.quadrature_grid(DEFAULT_QUADRATURE_ORDER);
    (point_matrix(kernel, mesh, trial_k, grid.points()), grid)
}

/// `κ_n = sup ||w||_E / ||A w||_F` over the spline space.
///
/// For `E = F = L^2` this is `1 / σ_min(W^{1/2} A)` (the basis is
/// orthonormal, so the mass matrix is the identity). Otherwise it is a
/// random-search lower bound; `F = C[0,1]` is sampled densely.
pub fn estimate_kappa(
    kernel: &Kernel,
    mesh: Mesh,
    trial_k: usize,
    e_spec: &SpaceSpec,
    f_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate_kappa_seeded(kernel, mesh, trial_k, e_spec, f_spec, budget, seed, &[], true)
}

/// Like [`estimate_kappa`] but always by random search, also for `p = r = 2`.
pub fn estimate_kappa_search(
    kernel: &Kernel,
    mesh: Mesh,
    trial_k: usize,
    e_spec: &SpaceSpec,
    f_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    estimate_kappa_seeded(kernel, mesh, trial_k, e_spec, f_spec, budget, seed, &[], false)
}

#[allow(clippy::too_many_arguments)]
fn estimate_kappa_seeded(
    kernel: &Kernel,
    mesh: Mesh,
    trial_k: usize,
    e_spec: &SpaceSpec,
    f_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
    starts: &[Vec<f64>],
    allow_exact: bool,
) -> Result<Estimate> {
    let (a, grid) = image_on_grid(kernel, mesh, trial_k);
    let w = grid.weights();
    let (l2_value, l2_arg) = weighted_extreme_singular(&a, w, false)?;
    if e_spec.p() == Some(2.0) && f_spec.p() == Some(2.0) && allow_exact {
        return Ok(Estimate {
            value: 1.0 / l2_value,
            method: Method::Exact,
            argmax: l2_arg,
        });
    }
    let mut starts = starts.to_vec();
    starts.push(l2_arg);
    let egrid = mesh.quadrature_grid(DEFAULT_QUADRATURE_ORDER);
    let basis = basis_on_grid(mesh, trial_k, &egrid);
    let dense: Vec<f64>;
    let (fmat, fweights): (DMatrix<f64>, Vec<f64>) = if f_spec.is_c() || f_spec.p() == Some(f64::INFINITY) {
        dense = dense_points(mesh.cells(), DEFAULT_SUP_SAMPLES_PER_CELL, &[]);
        (point_matrix(kernel, mesh, trial_k, &dense), vec![1.0; dense.len()])
    } else {
        (a, w.to_vec())
    };
    let ep = e_spec.p();
    let fp = if f_spec.is_c() { None } else { f_spec.p() };
    let ratio = |c: &[f64]| -> f64 {
        let cv = DVector::from_column_slice(c);
        let u = &basis * &cv;
        let au = &fmat * &cv;
        let den = sampled_norm(au.as_slice(), &fweights, fp);
        if den == 0.0 {
            return f64::NEG_INFINITY;
        }
        sampled_norm(u.as_slice(), egrid.weights(), ep) / den
    };
    let (value, argmax) = random_search(mesh.cells() * trial_k, budget, seed, &starts, ratio);
    Ok(Estimate {
        value,
        method: Method::RandomSearch,
        argmax,
    })
}

/// Smallest (or largest) singular value of `W^{1/2} A` with its right
/// singular vector.
fn weighted_extreme_singular(a: &DMatrix<f64>, w: &[f64], largest: bool) -> Result<(f64, Vec<f64>)> {
    let mut wa = a.clone();
    for (i, mut row) in wa.row_iter_mut().enumerate() {
        row *= w[i].sqrt();
    }
    let svd = wa.svd(false, true);
    let values = svd.singular_values.iter().copied().enumerate();
    let (i, s) = if largest {
        values.max_by(|x, y| x.1.total_cmp(&y.1))
    } else {
        values.min_by(|x, y| x.1.total_cmp(&y.1))
    }
    .ok_or(Error::EmptyGrid)?;
    if s == 0.0 {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let v_t = svd.v_t.expect("requested");
    Ok((s, v_t.row(i).iter().copied().collect()))
}

/// Basis functions sampled on a grid: `(grid point, coefficient index)`.
fn basis_on_grid(mesh: Mesh, k: usize, grid: &QuadratureGrid) -> DMatrix<f64> {
    let h = mesh.h();
    let mut m = DMatrix::zeros(grid.len(), mesh.cells() * k);
    let mut phi = vec![0.0; k];
    for (row, &s) in grid.points().iter().enumerate() {
        let i = mesh.cell_of(s);
        let (a, _) = mesh.cell(i);
        crate::splines::basis_values(a, h, k, s, &mut phi);
        for j in 0..k {
            m[(row, i * k + j)] = phi[j];
        }
    }
    m
}

/// The collocation map from node values `y` back to splines, `M^{-1}`, and
/// the dense image map `D M^{-1}` from node values to `A w` on a dense grid.
struct NodeMaps {
    minv: DMatrix<f64>,
    dense_from_nodes: DMatrix<f64>,
}

fn node_maps(kernel: &Kernel, scheme: &CollocationScheme, trial_k: usize) -> Result<NodeMaps> {
    let m = collocation_matrix(kernel, scheme, trial_k);
    let condition = condition_number(&m);
    if !(condition < MAX_CONDITION) {
        return Err(Error::Singular { condition });
    }
    let minv = m.try_inverse().ok_or(Error::Singular { condition })?;
    let mesh = scheme.mesh();
    let dense = dense_points(mesh.cells(), DEFAULT_SUP_SAMPLES_PER_CELL, &scheme.nodes());
    let d = point_matrix(kernel, mesh, trial_k, &dense);
    Ok(NodeMaps {
        dense_from_nodes: &d * &minv,
        minv,
    })
}

/// `τ_n = sup ||A w||_C / max_{i,j} |A w(t_{i,j})|`.
///
/// With `y = (A w)(t_{i,j})` the ratio is `||B y||_∞ / ||y||_∞` for
/// `B = D M^{-1}`, whose supremum is the largest absolute row sum of `B`.
/// `C[0,1]` is sampled at 64 points per cell plus the nodes, so the value is
/// exact for the sampled norm and a lower bound for the continuous one.
pub fn estimate_tau_n(kernel: &Kernel, scheme: &CollocationScheme, trial_k: usize) -> Result<Estimate> {
    let maps = node_maps(kernel, scheme, trial_k)?;
    tau_from_maps(&maps)
}

fn tau_from_maps(maps: &NodeMaps) -> Result<Estimate> {
    let b = &maps.dense_from_nodes;
    let (row, value) = (0..b.nrows())
        .map(|i| (i, b.row(i).iter().map(|x| x.abs()).sum::<f64>()))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or(Error::EmptyGrid)?;
    let argmax = b.row(row).iter().map(|x| if *x < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(Estimate {
        value,
        method: Method::Exact,
        argmax,
    })
}

/// Node counts up to this are enumerated exactly in [`estimate_kappa_tilde`].
pub const VERTEX_ENUMERATION_LIMIT: usize = 16;

/// `κ̃_n = ||A_n^{-1}|| = sup ||M^{-1} y||_E / ||y||_∞` over node values `y`.
///
/// The ratio is convex in `y` on the unit cube, so the supremum sits at a
/// vertex `y ∈ {±1}^m`: enumerated exactly for `m <= 16`, otherwise a
/// single-flip local search from seeded random vertices (a lower bound).
pub fn estimate_kappa_tilde(
    kernel: &Kernel,
    scheme: &CollocationScheme,
    trial_k: usize,
    e_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    let maps = node_maps(kernel, scheme, trial_k)?;
    kappa_tilde_from_maps(&maps, scheme.mesh(), trial_k, e_spec, budget, seed)
}

fn kappa_tilde_from_maps(
    maps: &NodeMaps,
    mesh: Mesh,
    trial_k: usize,
    e_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    let egrid = mesh.quadrature_grid(DEFAULT_QUADRATURE_ORDER);
    let eval = &basis_on_grid(mesh, trial_k, &egrid) * &maps.minv;
    let ep = e_spec.p();
    let norm_of = |y: &[f64]| -> f64 {
        let u = &eval * DVector::from_column_slice(y);
        sampled_norm(u.as_slice(), egrid.weights(), ep)
    };
    let m = maps.minv.nrows();
    if m <= VERTEX_ENUMERATION_LIMIT {
        let mut best = f64::NEG_INFINITY;
        let mut arg = vec![1.0; m];
        // y and -y give the same norm: fix the last sign
        for mask in 0..(1u64 << (m - 1)) {
            let y: Vec<f64> = (0..m)
                .map(|j| if j + 1 < m && mask >> j & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let v = norm_of(&y);
            if v > best {
                best = v;
                arg = y;
            }
        }
        return Ok(Estimate {
            value: best,
            method: Method::Exact,
            argmax: arg,
        });
    }
    // the sign pattern of the L^2 maximizer is evaluated outside the budget
    let (_, top) = weighted_extreme_singular(&eval, egrid.weights(), true)?;
    let mut arg: Vec<f64> = top.iter().map(|x| if *x < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut best = norm_of(&arg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = 0;
    let mut first = true;
    while used < budget {
        let mut y: Vec<f64> = if std::mem::take(&mut first) {
            arg.clone()
        } else {
            (0..m)
                .map(|_| if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 })
                .collect()
        };
        let mut cur = norm_of(&y);
        used += 1;
        let mut improved = true;
        while improved && used < budget {
            improved = false;
            for j in 0..m {
                if used >= budget {
                    break;
                }
                y[j] = -y[j];
                let v = norm_of(&y);
                used += 1;
                if v > cur {
                    cur = v;
                    improved = true;
                } else {
                    y[j] = -y[j];
                }
            }
        }
        if cur > best {
            best = cur;
            arg = y;
        }
    }
    Ok(Estimate {
        value: best,
        method: Method::RandomSearch,
        argmax: arg,
    })
}

/// `κ_n* = sup ||z||_{C*} / ||A* z||_{E*}` over Dirac combinations at the
/// nodes, searched over `ℓ¹`-normalized weights.
pub fn estimate_kappa_star(
    kernel: &Kernel,
    scheme: &CollocationScheme,
    e_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
) -> Result<Estimate> {
    // E* = L^{p*}; L^1 and L^∞ are dual to each other
    let pd = match e_spec.p() {
        Some(p) if p == 1.0 => None,
        Some(p) if p.is_infinite() => Some(1.0),
        Some(_) => e_spec.dual()?.p(),
        None => return Err(Error::Domain("κ_n* needs E = L^p".into())),
    };
    let nodes = scheme.nodes();
    let mut bps = scheme.mesh().breakpoints();
    bps.extend(&nodes);
    let grid = QuadratureGrid::composite(&bps, DEFAULT_QUADRATURE_ORDER);
    let kmat = DMatrix::from_fn(grid.len(), nodes.len(), |i, j| kernel.eval(nodes[j], grid.points()[i]));
    let ratio = |lam: &[f64]| -> f64 {
        let l1: f64 = lam.iter().map(|x| x.abs()).sum();
        if l1 == 0.0 {
            return f64::NEG_INFINITY;
        }
        let g = &kmat * DVector::from_column_slice(lam);
        let den = sampled_norm(g.as_slice(), grid.weights(), pd);
        if den == 0.0 {
            return f64::INFINITY;
        }
        l1 / den
    };
    let m = nodes.len();
    let starts: Vec<Vec<f64>> = (0..m)
        .map(|j| (0..m).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let (value, argmax) = random_search(m, budget, seed, &starts, ratio);
    if !value.is_finite() {
        return Err(Error::Singular { condition: f64::INFINITY });
    }
    let l1: f64 = argmax.iter().map(|x| x.abs()).sum();
    Ok(Estimate {
        value,
        method: Method::RandomSearch,
        argmax: argmax.iter().map(|x| x / l1).collect(),
    })
}

/// One row of a stability study in the collocation setting `F = C[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub n: usize,
    pub kappa: f64,
    pub tau: f64,
    pub kappa_tilde: f64,
    /// `τ_n κ_n`, the upper end of the chain `κ_n <= κ̃_n <= τ_n κ_n`.
    pub kappa_tilde_upper: f64,
    pub kappa_star: f64,
    pub method: Method,
    pub budget: usize,
    pub seed: u64,
}

/// Computes `κ_n` (with `F = C`), `τ_n`, `κ̃_n` and `κ_n*` for one scheme.
///
/// The `κ_n` search starts from the `κ̃_n` maximizer `w = M^{-1} y*`, whose
/// ratio is at least `κ̃_n / τ_n`; this keeps the lower-bound estimates
/// consistent with the chain.
pub fn stability_report(
    kernel: &Kernel,
    scheme: &CollocationScheme,
    trial_k: usize,
    e_spec: &SpaceSpec,
    budget: usize,
    seed: u64,
) -> Result<StabilityReport> {
    let maps = node_maps(kernel, scheme, trial_k)?;
    let mesh = scheme.mesh();
    let tau = tau_from_maps(&maps)?;
    let kt = kappa_tilde_from_maps(&maps, mesh, trial_k, e_spec, budget, seed)?;
    let start: Vec<f64> = (&maps.minv * DVector::from_column_slice(&kt.argmax)).iter().copied().collect();
    let kappa = estimate_kappa_seeded(kernel, mesh, trial_k, e_spec, &SpaceSpec::c(), budget, seed, &[start], false)?;
    let ks = estimate_kappa_star(kernel, scheme, e_spec, budget, seed)?;
    let method = kappa.method;
    Ok(StabilityReport {
        n: mesh.cells(),
        kappa: kappa.value,
        tau: tau.value,
        kappa_tilde: kt.value,
        kappa_tilde_upper: tau.value * kappa.value,
        kappa_star: ks.value,
        method,
        budget,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainCheck {
    pub holds: bool,
    /// `κ̃_n - κ_n`
    pub lower_slack: f64,
    /// `τ_n κ_n - κ̃_n`
    pub upper_slack: f64,
}

/// Checks `κ_n <= κ̃_n <= τ_n κ_n` up to a relative `1e-9`.
pub fn kappa_chain_check(report: &StabilityReport) -> ChainCheck {
    let tol = 1e-9 * report.kappa_tilde.abs().max(1.0);
    let lower_slack = report.kappa_tilde - report.kappa;
    let upper_slack = report.kappa_tilde_upper - report.kappa_tilde;
    ChainCheck {
        holds: lower_slack >= -tol && upper_slack >= -tol,
        lower_slack,
        upper_slack,
    }
}

/// CSV with columns `n, kappa, tau, kappa_tilde_upper, kappa_star, method, budget, seed`.
pub fn write_reports_csv<W: Write>(reports: &[StabilityReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "kappa", "tau", "kappa_tilde_upper", "kappa_star", "method", "budget", "seed"])?;
    for r in reports {
        w.write_record([
            r.n.to_string(),
            format!("{:.10e}", r.kappa),
            format!("{:.10e}", r.tau),
            format!("{:.10e}", r.kappa_tilde_upper),
            format!("{:.10e}", r.kappa_star),
            r.method.to_string(),
            r.budget.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
