//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! A failure flagged `known` is a documented deviation from a reference
//! value and does not change the exit status; any other failure does.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regproj::harness::{
    median, normalized_theta, run_table, run_table_rows, solve_problem, ExperimentConfig, MethodKind, RuleChoice,
};
use regproj::operators::{apply_a_sampled, model_rhs, point_matrix, CollocationScheme, Kernel};
use regproj::quadrature::QuadratureGrid;
use regproj::rules::{choose_n_monotone_error, me_index, tau_of_c, MeLevel, NFamily};
use regproj::solvers::{
    least_error_grid, solve_collocation, solve_least_error, solve_least_squares, LeastErrorOptions,
    LeastSquaresOptions,
};
use regproj::spaces::{bregman_distance, duality_map, lp_norm, pairing, SampledFunction, SpaceSpec};
use regproj::splines::Mesh;
use regproj::stability::{estimate_kappa, loglog_slope, Method};
use regproj::Function1D;

struct Check {
    pass: bool,
    /// The failure is a documented deviation.
    known: bool,
    detail: String,
    notes: Vec<String>,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            known: false,
            detail: detail.into(),
            notes: Vec::new(),
        }
    }
}

fn l2() -> SpaceSpec {
    SpaceSpec::lp(2.0).unwrap()
}

// 1

fn tau_values() -> Check {
    let reference = [(0.6, 5.67), (0.7, 4.10), (0.8, 4.22), (0.9, 6.51)];
    let start = Instant::now();
    let got: Vec<f64> = reference.iter().map(|&(c, _)| tau_of_c(c).unwrap()).collect();
    let elapsed = start.elapsed();
    let bad: Vec<f64> = reference
        .iter()
        .zip(&got)
        .filter(|((_, want), g)| (*g - want).abs() > 0.01)
        .map(|((c, _), _)| *c)
        .collect();
    let fast = elapsed.as_secs_f64() < 1e-3;
    let detail = format!(
        "tau = {} in {:.1} us",
        got.iter().map(|t| format!("{t:.4}")).collect::<Vec<_>>().join(", "),
        elapsed.as_secs_f64() * 1e6
    );
    let mut check = Check::new(bad.is_empty() && fast, detail);
    check.known = fast && bad == [0.9];
    if !bad.is_empty() {
        check.notes.push(format!("off by more than 0.01 at c = {bad:?}"));
    }
    check
}

// 2

/// `∫_0^t (t - s) s^r ds` after `s = t x^2`, by composite Simpson.
fn volterra2_quadrature(r: f64, t: f64) -> f64 {
    let m = 2000;
    let h = 1.0 / m as f64;
    let g = |x: f64| (t - t * x * x) * (t * x * x).powf(r) * 2.0 * t * x;
    (0..m)
        .map(|i| {
            let x0 = i as f64 * h;
            h / 6.0 * (g(x0) + 4.0 * g(x0 + 0.5 * h) + g(x0 + h))
        })
        .sum()
}

fn forward_model() -> Check {
    let mut worst: f64 = 0.0;
    for i in 1..=100 {
        let t = i as f64 / 100.0;
        for (r, closed) in [(0.5, 4.0 / 15.0 * t.powf(2.5)), (1.5, 4.0 / 35.0 * t.powf(3.5))] {
            let m = model_rhs(r, 2, t).unwrap();
            worst = worst.max((m - volterra2_quadrature(r, t)).abs()).max((m - closed).abs());
        }
    }
    Check::new(worst < 1e-8, format!("max deviation {worst:.2e} over 100 points"))
}

// 3

fn hilbert_case(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let l = rng.random_range(1..=2u32);
    let n = rng.random_range(1..=8usize);
    let k = rng.random_range(1..=2usize);
    let kernel = Kernel::volterra(l).unwrap();
    let mesh = Mesh::new(n).unwrap();
    let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let f = move |t: f64| a[0] + a[1] * t + a[2] * (6.0 * t).sin() + a[3] * t.sqrt();

    // least squares against the normal equations
    let grid = Arc::new(mesh.quadrature_grid(8));
    let fs = SampledFunction::from_fn(grid.clone(), &f).unwrap();
    let res = solve_least_squares(&kernel, mesh, k, &fs, &l2(), &LeastSquaresOptions::default()).unwrap();
    let m = point_matrix(&kernel, mesh, k, grid.points());
    let w = DMatrix::from_diagonal(&DVector::from_column_slice(grid.weights()));
    let normal = m.transpose() * &w * &m;
    let rhs = m.transpose() * &w * DVector::from_column_slice(fs.values());
    let oracle = normal.cholesky().unwrap().solve(&rhs);
    let scale = oracle.amax().max(1.0);
    let ls = res
        .coeffs()
        .unwrap()
        .iter()
        .zip(oracle.iter())
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max);

    // least error against the minimum-norm solution: λ = (K W Kᵀ)⁻¹ y
    let scheme = if k == 1 {
        CollocationScheme::endpoint(mesh)
    } else {
        CollocationScheme::with_endpoint(mesh, rng.random_range(0.55..0.95)).unwrap()
    };
    let nodes = scheme.nodes();
    let values: Vec<f64> = nodes.iter().map(|&t| f(t)).collect();
    let le_grid = Arc::new(least_error_grid(&scheme, 8));
    let opts = LeastErrorOptions {
        grid: Some(le_grid.clone()),
        dense_residual: false,
        ..LeastErrorOptions::default()
    };
    let res = solve_least_error(&kernel, &scheme, &values, &l2(), &opts).unwrap();
    let (pts, wts) = (le_grid.points(), le_grid.weights());
    let kmat = DMatrix::from_fn(nodes.len(), pts.len(), |j, i| kernel.eval(nodes[j], pts[i]));
    let gram = DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| {
        (0..pts.len()).map(|s| wts[s] * kmat[(i, s)] * kmat[(j, s)]).sum()
    });
    let lambda = gram.cholesky().unwrap().solve(&DVector::from_column_slice(&values));
    let dual = res.dual.as_ref().unwrap();
    let scale = lambda.amax().max(1.0);
    let le = dual
        .weights()
        .iter()
        .zip(lambda.iter())
        .map(|(x, y)| (x - y).abs() / scale)
        .fold(0.0, f64::max);
    (ls, le)
}

fn hilbert() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut ls, mut le) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (a, b) = hilbert_case(&mut rng);
        ls = ls.max(a);
        le = le.max(b);
    }
    Check::new(
        ls < 1e-10 && le < 1e-10,
        format!("20 instances, max coefficient gap LS {ls:.2e}, LE {le:.2e} (relative to max(1, |c|))"),
    )
}

// 4

fn exact_recovery() -> Check {
    let kernel = Kernel::volterra(2).unwrap();
    let l1 = SpaceSpec::lp(1.0).unwrap();
    let mut worst: f64 = 0.0;
    for n in [1, 2, 4] {
        let mesh = Mesh::new(n).unwrap();
        let scheme = CollocationScheme::with_endpoint(mesh, 0.7).unwrap();
        let values: Vec<f64> = scheme.nodes().iter().map(|&t| t.powi(3) / 6.0).collect();
        let res = solve_collocation(&kernel, &scheme, 2, &values).unwrap();
        let grid = mesh.quadrature_grid(8);
        let e = regproj::spaces::lp_norm_of(&|s: f64| res.solution.value(s) - s, &grid, &l1).unwrap();
        worst = worst.max(e);
    }
    Check::new(worst < 1e-9, format!("max L1 error {worst:.2e} for n = 1, 2, 4"))
}

// 5

fn kappa_growth() -> Check {
    let start = Instant::now();
    let ns = [4.0, 8.0, 16.0, 32.0, 64.0];
    let mut slopes = Vec::new();
    for l in [1u32, 2] {
        let kernel = Kernel::volterra(l).unwrap();
        let kappas: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let e = estimate_kappa(&kernel, Mesh::new(n as usize).unwrap(), 2, &l2(), &l2(), 0, 0).unwrap();
                assert_eq!(e.method, Method::Exact);
                e.value
            })
            .collect();
        slopes.push((l, loglog_slope(&ns, &kappas)));
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = slopes.iter().all(|&(l, s)| (s - l as f64).abs() <= 0.2) && secs < 30.0;
    Check::new(
        ok,
        format!(
            "slopes {} in {secs:.2} s",
            slopes.iter().map(|(l, s)| format!("l={l}: {s:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// 6

/// `(c, δ, r, n_D, e_D)` reference rows.
const TABLE_REFERENCE: [(f64, f64, f64, f64, f64); 12] = [
    (0.7, 1e-2, 0.5, 1.0, 0.336),
    (0.7, 1e-3, 0.5, 2.0, 0.145),
    (0.7, 1e-4, 0.5, 4.0, 0.065),
    (0.7, 1e-2, 1.5, 1.0, 0.516),
    (0.7, 1e-3, 1.5, 2.0, 0.169),
    (0.7, 1e-4, 1.5, 4.0, 0.054),
    (0.8, 1e-2, 0.5, 1.0, 0.358),
    (0.8, 1e-3, 0.5, 2.0, 0.148),
    (0.8, 1e-4, 0.5, 4.0, 0.063),
    (0.8, 1e-2, 1.5, 1.0, 0.534),
    (0.8, 1e-3, 1.5, 2.0, 0.164),
    (0.8, 1e-4, 1.5, 4.0, 0.050),
];

fn table_reproduction() -> Check {
    let start = Instant::now();
    let config = ExperimentConfig::from_str_kv(
        "c = 0.7, 0.8\ndelta = 1e-2, 1e-3, 1e-4\nr = 0.5, 1.5\nn-max = 24\nrepetitions = 20\nseed = 1\n",
    )
    .unwrap();
    let (rows, _) = run_table_rows(&config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let (mut nd_ok, mut ed_ok) = (0, 0);
    let mut notes = Vec::new();
    for &(c, delta, r, nd_ref, ed_ref) in &TABLE_REFERENCE {
        let cell: Vec<_> = rows.iter().filter(|x| x.c == c && x.delta == delta && x.r == r).collect();
        assert_eq!(cell.len(), 20);
        let nd: Vec<f64> = cell.iter().filter_map(|x| x.n_d.map(|n| n as f64)).collect();
        let ed: Vec<f64> = cell.iter().filter_map(|x| x.e_d).collect();
        // a repetition without n_D counts as failing the cell
        let (nd_med, ed_med) = match (nd.len() == 20, median(&nd), median(&ed)) {
            (true, Some(a), Some(b)) => (a, b),
            _ => (f64::NAN, f64::NAN),
        };
        let n_good = (nd_med - nd_ref).abs() <= 2.0;
        let e_good = ed_med <= 3.0 * ed_ref && ed_med >= ed_ref / 3.0;
        nd_ok += n_good as usize;
        ed_ok += e_good as usize;
        if !(n_good && e_good) {
            notes.push(format!(
                "c={c} delta={delta:e} r={r}: n_D {nd_med} (ref {nd_ref}), e_D {ed_med:.4} (ref {ed_ref})"
            ));
        }
    }
    let timely = secs < 300.0;
    let mut check = Check::new(
        nd_ok == 12 && ed_ok == 12 && timely,
        format!("median over 20 seeds: n_D within 2 on {nd_ok}/12, e_D within 3x on {ed_ok}/12, {secs:.1} s"),
    );
    // the e_D scale is a documented deviation; n_D and runtime are not
    check.known = nd_ok == 12 && timely;
    check.notes = notes;
    check
}

// 7

/// Least error levels on endpoint collocation sharing the finest grid.
struct Nested {
    kernel: Kernel,
    grid: Arc<QuadratureGrid>,
    fine_values: Vec<f64>,
    finest: usize,
    spec: SpaceSpec,
}

impl Nested {
    fn new(l: u32, finest: usize, p: f64, fine_values: Vec<f64>) -> Self {
        let scheme = CollocationScheme::endpoint(Mesh::new(finest).unwrap());
        Self {
            kernel: Kernel::volterra(l).unwrap(),
            grid: Arc::new(least_error_grid(&scheme, 8)),
            fine_values,
            finest,
            spec: SpaceSpec::lp(p).unwrap(),
        }
    }

    fn level(&self, n: usize) -> MeLevel {
        let stride = self.finest / n;
        let values: Vec<f64> = (0..n).map(|i| self.fine_values[(i + 1) * stride - 1]).collect();
        let scheme = CollocationScheme::endpoint(Mesh::new(n).unwrap());
        let opts = LeastErrorOptions {
            grid: Some(self.grid.clone()),
            dense_residual: false,
            ..LeastErrorOptions::default()
        };
        let result = solve_least_error(&self.kernel, &scheme, &values, &self.spec, &opts).unwrap();
        MeLevel { result, values }
    }
}

fn least_error_monotone() -> Check {
    let finest = 32;
    let fine_nodes: Vec<f64> = (1..=finest).map(|i| i as f64 / finest as f64).collect();
    let mut worst = f64::INFINITY;
    let mut runs = 0;
    for p in [2.0, 4.0] {
        for l in [1u32, 2] {
            for seed in 0..3u64 {
                let theta = normalized_theta(finest, seed).unwrap();
                let values: Vec<f64> = fine_nodes
                    .iter()
                    .zip(&theta)
                    .map(|(&t, th)| model_rhs(0.5, l, t).unwrap() + 1e-2 * th)
                    .collect();
                let inst = Nested::new(l, finest, p, values);
                let norms: Vec<f64> = [1, 2, 4, 8, 16, 32]
                    .iter()
                    .map(|&n| inst.level(n).result.solution.lp_norm(&inst.spec).unwrap())
                    .collect();
                for w in norms.windows(2) {
                    worst = worst.min(w[1] - w[0]);
                }
                runs += 1;
            }
        }
    }
    Check::new(
        worst >= -1e-8,
        format!("{runs} nested families, smallest norm increment {worst:.2e}"),
    )
}

// 8

fn monotone_error_rule() -> Check {
    let finest = 32;
    let scheme = CollocationScheme::endpoint(Mesh::new(finest).unwrap());
    let kernel = Kernel::volterra(1).unwrap();
    let levels = NFamily::Dyadic { start: 1, n_max: finest }.levels();
    let (mut checked, mut violations, mut worst) = (0, 0, f64::NEG_INFINITY);
    for p in [2.0, 4.0] {
        for seed in 0..10u64 {
            let mut inst = Nested::new(1, finest, p, Vec::new());
            // u* varies with the seed; data are A u* on the shared grid
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0));
            let u_star =
                SampledFunction::from_fn(inst.grid.clone(), &move |s: f64| a * s.sqrt() + b * (3.0 * s).sin()).unwrap();
            let exact: Vec<f64> = scheme.nodes().iter().map(|&t| apply_a_sampled(&kernel, &u_star, t)).collect();
            let fmax = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let delta = 0.1 * fmax;
            let theta = normalized_theta(finest, seed).unwrap();
            inst.fine_values = exact.iter().zip(&theta).map(|(f, th)| f + delta * th).collect();
            let q = inst.spec.q().unwrap();
            let trace = choose_n_monotone_error(&levels, |n| Ok(inst.level(n)), delta, q).unwrap();
            let err = |n: usize| {
                let u = inst.level(n).result.solution.sample(inst.grid.clone()).unwrap();
                bregman_distance(&u_star, &u, &inst.spec).unwrap()
            };
            // every level pair, not only those the rule visited
            for w in levels.windows(2) {
                let (lo, hi) = (inst.level(w[0]), inst.level(w[1]));
                let d = match me_index(&lo.result.dual.unwrap(), &hi.result.dual.unwrap(), &hi.values, q) {
                    Ok(d) => d,
                    Err(_) => continue,
                };
                if delta <= d {
                    checked += 1;
                    let gap = err(w[1]) - err(w[0]);
                    worst = worst.max(gap);
                    if gap > 1e-8 {
                        violations += 1;
                    }
                }
            }
            assert!(trace.records.iter().all(|r| r.criterion_value >= -1e-10));
        }
    }
    Check::new(
        violations == 0 && checked > 0,
        format!("20 runs, {checked} level pairs with delta <= d_ME, largest Bregman increase {worst:.2e}"),
    )
}

// 9

fn duality_identities() -> Check {
    let grid = Arc::new(QuadratureGrid::uniform(16, 12));
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let random = |rng: &mut ChaCha8Rng| {
        let c: [f64; 5] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        SampledFunction::from_fn(grid.clone(), &move |t: f64| {
            c[0] + c[1] * t + c[2] * (7.0 * t).sin() + c[3] * (t - 0.4).abs().sqrt() + c[4] * (3.0 * t).exp()
        })
        .unwrap()
    };
    let (mut id1, mut id2, mut self_d, mut min_d) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for p in [1.5, 2.0, 3.0, 4.0] {
        let spec = SpaceSpec::lp(p).unwrap();
        let dual = spec.dual().unwrap();
        let q = spec.q().unwrap();
        for _ in 0..50 {
            let (u, v) = (random(&mut rng), random(&mut rng));
            let (ju, jv) = (duality_map(&u, &spec).unwrap(), duality_map(&v, &spec).unwrap());
            let nq = lp_norm(&u, &spec).unwrap().powf(q);
            id1 = id1.max((pairing(&ju, &u).unwrap() - nq).abs() / nq.max(1.0));
            let lhs = bregman_distance(&ju, &jv, &dual).unwrap();
            let rhs = bregman_distance(&v, &u, &spec).unwrap();
            id2 = id2.max((lhs - rhs).abs() / rhs.max(1.0));
            self_d = self_d.max(bregman_distance(&u, &u, &spec).unwrap().abs());
            min_d = min_d.min(bregman_distance(&u, &v, &spec).unwrap());
        }
    }
    Check::new(
        id1 < 1e-8 && id2 < 1e-8 && self_d < 1e-8 && min_d > 0.0,
        format!("<J(w), w> gap {id1:.1e}, dual Bregman gap {id2:.1e}, D(u,u) {self_d:.1e}, min D(u,v) {min_d:.1e}"),
    )
}

// 10

fn lr_objective(a: &DMatrix<f64>, w: &[f64], f: &[f64], r: f64, c: &[f64]) -> f64 {
    let rho = a * DVector::from_column_slice(c) - DVector::from_column_slice(f);
    rho.iter().zip(w).map(|(x, w)| w * x.abs().powf(r)).sum::<f64>().powf(1.0 / r)
}

/// Nelder-Mead in two dimensions.
fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: [f64; 2], step: f64) -> [f64; 2] {
    let mut s = vec![start, [start[0] + step, start[1]], [start[0], start[1] + step]];
    for _ in 0..4000 {
        s.sort_by(|a, b| f(a).total_cmp(&f(b)));
        let c = [(s[0][0] + s[1][0]) / 2.0, (s[0][1] + s[1][1]) / 2.0];
        let pt = |t: f64| [c[0] + t * (s[2][0] - c[0]), c[1] + t * (s[2][1] - c[1])];
        let refl = pt(-1.0);
        if f(&refl) < f(&s[0]) {
            let exp = pt(-2.0);
            s[2] = if f(&exp) < f(&refl) { exp } else { refl };
        } else if f(&refl) < f(&s[1]) {
            s[2] = refl;
        } else {
            let con = pt(0.5);
            if f(&con) < f(&s[2]) {
                s[2] = con;
            } else {
                for i in 1..3 {
                    s[i] = [(s[i][0] + s[0][0]) / 2.0, (s[i][1] + s[0][1]) / 2.0];
                }
            }
        }
    }
    s.sort_by(|a, b| f(a).total_cmp(&f(b)));
    s[0]
}

fn least_squares_optimality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let r = 4.0;
    let spec = SpaceSpec::lp(r).unwrap();
    let mut worst_grad: f64 = 0.0;
    let mut worst_obj: f64 = 0.0;
    let mut nm_cases = 0;
    for case in 0..20 {
        let l = 1 + (case % 2) as u32;
        let (n, k) = if case % 4 == 0 { (2, 1) } else { (rng.random_range(1..=6), rng.random_range(1..=2)) };
        let kernel = Kernel::volterra(l).unwrap();
        let mesh = Mesh::new(n).unwrap();
        let grid = Arc::new(mesh.quadrature_grid(10));
        let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let f = SampledFunction::from_fn(grid.clone(), &move |t: f64| {
            a[0] * t.sqrt() + a[1] * (9.0 * t).sin() + a[2] * (t - 0.3).abs()
        })
        .unwrap();
        let res = solve_least_squares(&kernel, mesh, k, &f, &spec, &LeastSquaresOptions::default()).unwrap();
        let c = res.coeffs().unwrap();
        let m = point_matrix(&kernel, mesh, k, grid.points());
        let w = grid.weights();
        // derivative of Σ w |ρ|^r along each basis direction, against the
        // same sum with absolute values
        let rho = &m * DVector::from_column_slice(c) - DVector::from_column_slice(f.values());
        for j in 0..c.len() {
            let (mut d, mut scale) = (0.0, 0.0);
            for i in 0..rho.len() {
                let g = w[i] * r * rho[i].abs().powf(r - 1.0) * m[(i, j)];
                d += g * rho[i].signum();
                scale += g.abs();
            }
            worst_grad = worst_grad.max(d.abs() / scale.max(f64::MIN_POSITIVE));
        }
        if (n, k) == (2, 1) {
            nm_cases += 1;
            let obj = |x: &[f64]| lr_objective(&m, w, f.values(), r, x);
            let nm = nelder_mead(obj, [0.0, 0.0], 0.5);
            worst_obj = worst_obj.max((obj(c) - obj(&nm)).abs());
        }
    }
    Check::new(
        worst_grad < 1e-8 && worst_obj < 1e-5,
        format!("20 instances, max relative directional derivative {worst_grad:.1e}; {nm_cases} brute-force cases, objective gap {worst_obj:.1e}"),
    )
}

// 11

fn discrepancy_semantics() -> Check {
    let (mut runs, mut bad) = (0, Vec::new());
    for method in [MethodKind::Collocation, MethodKind::LeastSquares] {
        for c in [0.6, 0.7, 0.8, 0.9] {
            for delta in [1e-2, 1e-3, 1e-4] {
                for seed in 0..3u64 {
                    let mut config = ExperimentConfig::default();
                    config.c = vec![c];
                    config.delta = vec![delta];
                    config.r = vec![0.5];
                    config.n_max = 32;
                    config.method = method;
                    config.rule = RuleChoice::Dp;
                    config.seed = seed;
                    let rep = solve_problem(&config).unwrap();
                    let trace = rep.trace.as_ref().unwrap();
                    let bound = trace.parameter * delta;
                    runs += 1;
                    let Some(n) = trace.chosen_n else { continue };
                    let at = |m: usize| trace.records.iter().find(|x| x.n == m).map(|x| x.criterion_value);
                    let ok = at(n).is_some_and(|v| v <= bound)
                        && rep.residual <= bound
                        && (n == 1 || at(n - 1).is_some_and(|v| v > bound));
                    if !ok {
                        bad.push(format!("{method:?} c={c} delta={delta:e} seed={seed}: n = {n}"));
                    }
                }
            }
        }
    }
    let mut check = Check::new(bad.is_empty(), format!("{runs} traced runs, {} violations", bad.len()));
    check.notes = bad;
    check
}

// 12

fn determinism() -> Check {
    let config = ExperimentConfig::from_str_kv("c = 0.7, 0.8\ndelta = 1e-2, 1e-3\nr = 0.5, 1.5\nn-max = 16\nrepetitions = 3\nseed = 42\n")
        .unwrap();
    let lib = (run_table(&config).unwrap(), run_table(&config).unwrap());
    let cli = || {
        let out = Command::new(env!("CARGO_BIN_EXE_regproj"))
            .args(["table", "--c", "0.7,0.8", "--delta", "1e-2,1e-3", "--r", "0.5,1.5", "--n-max", "16"])
            .args(["--repetitions", "3", "--seed", "42"])
            .output()
            .unwrap();
        assert!(out.status.success());
        out.stdout
    };
    let (a, b) = (cli(), cli());
    let ok = lib.0 == lib.1 && a == b && a == lib.0.as_bytes();
    Check::new(ok, format!("two library runs and two CLI runs, {} bytes each", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("tau(c) reference values", tau_values),
        ("analytic forward model", forward_model),
        ("Hilbert specialization", hilbert),
        ("exact recovery", exact_recovery),
        ("kappa_n growth", kappa_growth),
        ("table reproduction", table_reproduction),
        ("least error monotone norms", least_error_monotone),
        ("monotone error rule", monotone_error_rule),
        ("duality and Bregman identities", duality_identities),
        ("least squares optimality", least_squares_optimality),
        ("discrepancy semantics", discrepancy_semantics),
        ("determinism", determinism),
    ];
    let mut unexpected = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let check = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Check::new(false, format!("panicked: {msg}"))
        });
        let tag = match (check.pass, check.known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} {:>2} {name}: {}", i + 1, check.detail);
        for note in &check.notes {
            println!("        {note}");
        }
        if !check.pass && !check.known {
            unexpected += 1;
        }
    }
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
