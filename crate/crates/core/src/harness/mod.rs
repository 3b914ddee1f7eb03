//! Noise generation, the dimension-choice experiment and the drivers behind
//! the command-line tool.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::Function1D;
use crate::operators::{model_rhs, CollocationScheme, Kernel};
use crate::rules::{
    choose_n_apriori, choose_n_discrepancy, choose_n_monotone_error, default_b, MeLevel, NFamily, RuleTrace,
};
use crate::solvers::{
    least_error_grid, solve_least_error, solve_least_squares, CollocationSystem, LeastErrorOptions,
    LeastSquaresOptions, NodeInterpolant, SolveResult,
};
use crate::spaces::{SampledFunction, SpaceSpec, DEFAULT_QUADRATURE_ORDER};
use crate::splines::Mesh;
use crate::stability::{stability_report, StabilityReport};

pub mod config;
pub mod noise;
pub mod table;

pub use config::{ExperimentConfig, MethodKind, RuleChoice};
pub use noise::{gen_noise, normalized_theta, standard_normals, sub_seed, uniform01};
pub use table::{
    error_grid, experiment_scheme, median, repetition_seed, run_cell, run_table, run_table_rows, write_table_csv,
    AggregateRow, ExperimentRow,
};

/// Outcome of the `solve` driver.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub n: usize,
    pub result: SolveResult,
    /// `||A u_n - f^δ||_C` against the noisy data extended off the nodes.
    pub residual: f64,
    /// `||u_n - u*||_{L^p}` with `u*(s) = s^r`.
    pub error: f64,
    pub trace: Option<RuleTrace>,
}

/// Noisy model problem: exact data for `u*(s) = s^r` plus `δ Iθ`, where
/// `Iθ` interpolates the node noise piecewise linearly.
struct NoisyData {
    r: f64,
    l: u32,
    delta: f64,
    noise: NodeInterpolant,
    nodes: Vec<f64>,
    theta: Vec<f64>,
}

impl NoisyData {
    fn new(config: &ExperimentConfig, nodes: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        Ok(Self {
            r: config.r[0],
            l: config.l,
            delta: config.delta[0],
            noise: NodeInterpolant::new(nodes.clone(), theta.clone())?,
            nodes,
            theta,
        })
    }

    fn node_values(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .zip(&self.theta)
            .map(|(&t, th)| model_rhs(self.r, self.l, t).unwrap_or(f64::NAN) + self.delta * th)
            .collect()
    }
}

impl Function1D for NoisyData {
    fn value(&self, t: f64) -> f64 {
        model_rhs(self.r, self.l, t).unwrap_or(f64::NAN) + self.delta * self.noise.value(t)
    }
}

/// Node parameters for the `solve` and `stability` drivers: `{c, 1}` for
/// `k = 2`, `{1}` for `k = 1`, Radau-type `{1/k, ..., 1}` otherwise.
pub fn driver_scheme(mesh: Mesh, k: usize, c: f64) -> Result<CollocationScheme> {
    match k {
        1 => Ok(CollocationScheme::endpoint(mesh)),
        2 => CollocationScheme::with_endpoint(mesh, c),
        _ => CollocationScheme::new(mesh, (1..=k).map(|j| j as f64 / k as f64).collect()),
    }
}

fn l_error(solution: &dyn Function1D, n: usize, r: f64, p: f64) -> Result<f64> {
    let grid = error_grid(n)?;
    Ok(grid.integrate(|s| (solution.value(s) - s.powf(r)).abs().powf(p)).powf(1.0 / p))
}

fn solve_level(config: &ExperimentConfig, kernel: &Kernel, n: usize) -> Result<(SolveResult, f64)> {
    let mesh = Mesh::new(n)?;
    let scheme = driver_scheme(mesh, config.k, config.c[0])?;
    let nodes = scheme.nodes();
    let theta = normalized_theta(nodes.len(), sub_seed(config.seed, n as u64))?;
    let data = NoisyData::new(config, nodes, theta)?;
    let values = data.node_values();
    match config.method {
        MethodKind::Collocation => {
            let system = CollocationSystem::new(kernel, &scheme, config.k)?;
            let mut res = system.solve(&values)?;
            let coeffs = res.coeffs().expect("spline").to_vec();
            res.residual_c = system.sup_residual(&coeffs, &data);
            let residual = res.residual_c;
            Ok((res, residual))
        }
        MethodKind::LeastSquares => {
            let grid = Arc::new(mesh.quadrature_grid(DEFAULT_QUADRATURE_ORDER));
            let f_delta = SampledFunction::from_fn(grid, &data)?;
            let f_spec = SpaceSpec::lp(config.r_exp)?;
            let res = solve_least_squares(kernel, mesh, config.k, &f_delta, &f_spec, &LeastSquaresOptions::default())?;
            let residual = crate::solvers::residual(&res, &data, &SpaceSpec::c())?;
            Ok((res, residual))
        }
        MethodKind::LeastError => {
            let e_spec = SpaceSpec::lp(config.p)?;
            let res = solve_least_error(kernel, &scheme, &values, &e_spec, &LeastErrorOptions::default())?;
            let residual = crate::solvers::residual(&res, &data, &SpaceSpec::c())?;
            Ok((res, residual))
        }
    }
}

/// Solves the model problem `u*(s) = s^r` with the configured method,
/// choosing `n` by the configured rule. Uses the first entry of the `c`,
/// `δ` and `r` lists.
pub fn solve_problem(config: &ExperimentConfig) -> Result<SolveReport> {
    config.validate()?;
    let kernel = Kernel::volterra(config.l)?;
    let delta = config.delta[0];
    let (r, p) = (config.r[0], config.p);
    match config.rule {
        RuleChoice::Apriori => {
            let n = choose_n_apriori(delta, config.l, config.theta)?.min(config.n_max);
            let (result, residual) = solve_level(config, &kernel, n)?;
            let error = l_error(&result.solution, n, r, p)?;
            Ok(SolveReport {
                n,
                result,
                residual,
                error,
                trace: None,
            })
        }
        RuleChoice::Dp => {
            let b = match config.b {
                Some(b) => b,
                None => default_b(config.c[0])?,
            };
            let family = NFamily::Consecutive {
                start: 1,
                n_max: config.n_max,
            };
            let mut last = None;
            let trace = choose_n_discrepancy(
                family,
                |n| {
                    let (mut res, residual) = solve_level(config, &kernel, n)?;
                    res.residual_c = residual;
                    last = Some((n, res.clone()));
                    Ok(res)
                },
                delta,
                b,
            )?;
            finish_trace(trace, last, r, p)
        }
        RuleChoice::Me => solve_monotone_error(config, &kernel),
    }
}

fn finish_trace(trace: RuleTrace, last: Option<(usize, SolveResult)>, r: f64, p: f64) -> Result<SolveReport> {
    let (n, result) = match (trace.chosen_n, last) {
        (Some(n), Some((m, res))) if n == m => (n, res),
        (_, Some((m, res))) => (m, res),
        (_, None) => {
            let msg = trace.failure.map(|(n, m)| format!("at n = {n}: {m}")).unwrap_or_default();
            return Err(Error::Domain(format!("rule produced no solution {msg}")));
        }
    };
    let residual = result.residual_c;
    let error = l_error(&result.solution, n, r, p)?;
    Ok(SolveReport {
        n,
        result,
        residual,
        error,
        trace: Some(trace),
    })
}

/// Monotone error rule for least error on endpoint collocation, dyadic
/// `n <= n_max`. The noise is drawn once at the finest nodes and restricted
/// to the coarser (nested) node sets; all levels share the finest
/// quadrature grid so the discrete problems nest exactly.
fn solve_monotone_error(config: &ExperimentConfig, kernel: &Kernel) -> Result<SolveReport> {
    let e_spec = SpaceSpec::lp(config.p)?;
    let q = e_spec.q()?;
    let levels = NFamily::Dyadic {
        start: 1,
        n_max: config.n_max,
    }
    .levels();
    let finest = *levels.last().expect("n_max >= 1");
    let fine_scheme = CollocationScheme::endpoint(Mesh::new(finest)?);
    let fine_nodes = fine_scheme.nodes();
    let fine_theta = normalized_theta(fine_nodes.len(), config.seed)?;
    let data = NoisyData::new(config, fine_nodes, fine_theta)?;
    let fine_values = data.node_values();
    let options = LeastErrorOptions {
        grid: Some(Arc::new(least_error_grid(&fine_scheme, DEFAULT_QUADRATURE_ORDER))),
        ..LeastErrorOptions::default()
    };
    let mut chosen: Vec<(usize, SolveResult)> = Vec::new();
    let trace = choose_n_monotone_error(
        &levels,
        |n| {
            let scheme = CollocationScheme::endpoint(Mesh::new(n)?);
            let stride = finest / n;
            let values: Vec<f64> = (0..n).map(|i| fine_values[(i + 1) * stride - 1]).collect();
            let result = solve_least_error(kernel, &scheme, &values, &e_spec, &options)?;
            chosen.push((n, result.clone()));
            Ok(MeLevel { result, values })
        },
        config.delta[0],
        q,
    )?;
    let pick = trace.chosen_n.unwrap_or(finest);
    let (n, mut result) = chosen
        .into_iter()
        .find(|(n, _)| *n == pick)
        .ok_or_else(|| Error::Domain(format!("monotone error rule stopped before n = {pick}")))?;
    result.residual_c = crate::solvers::residual(&result, &data, &SpaceSpec::c())?;
    let error = l_error(&result.solution, n, config.r[0], config.p)?;
    Ok(SolveReport {
        n,
        residual: result.residual_c,
        result,
        error,
        trace: Some(trace),
    })
}

/// Stability constants for `E = L^p`, `F = C[0,1]` on dyadic `n <= n_max`.
pub fn stability_sweep(config: &ExperimentConfig) -> Result<Vec<StabilityReport>> {
    config.validate()?;
    let kernel = Kernel::volterra(config.l)?;
    let e_spec = SpaceSpec::lp(config.p)?;
    NFamily::Dyadic {
        start: 1,
        n_max: config.n_max,
    }
    .levels()
    .into_iter()
    .map(|n| {
        let scheme = driver_scheme(Mesh::new(n)?, config.k, config.c[0])?;
        stability_report(&kernel, &scheme, config.k, &e_spec, config.budget, config.seed)
            .map_err(|e| Error::AtLevel { n, source: Box::new(e) })
    })
    .collect()
}
