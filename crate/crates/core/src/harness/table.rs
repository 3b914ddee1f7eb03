//! The dimension-choice experiment: collocation for `u*(s) = s^r` with noisy
//! node data, `n` swept over `1..=n_max`, comparing the discrepancy choice
//! `n_D` with the error-optimal `n_opt`.

use std::io::Write;
use std::sync::Arc;

use super::config::ExperimentConfig;
use super::noise::{normalized_theta, sub_seed};
use crate::error::{Error, Result};
use crate::function::Function1D;
use crate::operators::{model_rhs, CollocationScheme, Kernel};
use crate::quadrature::QuadratureGrid;
use crate::rules::{default_b, discrepancy_from_residuals};
use crate::solvers::{CollocationSystem, NodeInterpolant};
use crate::spaces::DEFAULT_QUADRATURE_ORDER;
use crate::splines::Mesh;

/// Halvings of the first cell in the error quadrature.
const GRADING_LEVELS: usize = 40;

/// One `(c, δ, r, seed)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub c: f64,
    pub delta: f64,
    pub r: f64,
    pub n_opt: Option<usize>,
    pub e_opt: Option<f64>,
    pub n_d: Option<usize>,
    pub e_d: Option<f64>,
    pub b_used: f64,
    pub b_opt: Option<f64>,
    pub r_b: Option<f64>,
    pub r_e: Option<f64>,
    pub seed: u64,
    /// `ok`, `not reached` (no `n <= n_max` passed), `no noise` (`δ = 0`)
    /// or `failed at n = ..: ...`.
    pub status: String,
}

/// Medians over the repetitions of one `(c, δ, r)`; each column over the
/// repetitions where it is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub c: f64,
    pub delta: f64,
    pub r: f64,
    pub n_opt: Option<f64>,
    pub e_opt: Option<f64>,
    pub n_d: Option<f64>,
    pub e_d: Option<f64>,
    pub b_used: f64,
    pub b_opt: Option<f64>,
    pub r_b: Option<f64>,
    pub r_e: Option<f64>,
    pub seed: u64,
    /// Repetitions that produced an `n_D`.
    pub reached: usize,
    pub repetitions: usize,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Collocation scheme used by the experiment: `{c, 1}` for `k = 2`, `{c}` for `k = 1`.
pub fn experiment_scheme(mesh: Mesh, k: usize, c: f64) -> Result<CollocationScheme> {
    match k {
        1 => CollocationScheme::new(mesh, vec![c]),
        2 => CollocationScheme::with_endpoint(mesh, c),
        _ => Err(Error::Config(format!("the experiment uses k = 1 or k = 2, got {k}"))),
    }
}

struct Level {
    system: CollocationSystem,
    nodes: Vec<f64>,
    error_grid: QuadratureGrid,
}

/// Factored systems and error grids for one `c`, reused across `δ`, `r` and seeds.
struct SweepCache {
    c: f64,
    levels: Vec<Level>,
}

impl SweepCache {
    fn new(config: &ExperimentConfig, kernel: &Kernel, c: f64) -> Result<Self> {
        let levels = (1..=config.n_max)
            .map(|n| {
                let mesh = Mesh::new(n)?;
                let scheme = experiment_scheme(mesh, config.k, c)?;
                let system = CollocationSystem::new(kernel, &scheme, config.k)
                    .map_err(|e| Error::AtLevel { n, source: Box::new(e) })?;
                Ok(Level {
                    system,
                    nodes: scheme.nodes(),
                    error_grid: QuadratureGrid::graded_at_zero(&mesh.breakpoints(), DEFAULT_QUADRATURE_ORDER, GRADING_LEVELS),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { c, levels })
    }

    /// Error and residual over all levels for one noise realization.
    fn sweep(&self, config: &ExperimentConfig, delta: f64, r: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut errors = Vec::with_capacity(self.levels.len());
        let mut residuals = Vec::with_capacity(self.levels.len());
        let exact = |t: f64| model_rhs(r, config.l, t).unwrap_or(f64::NAN);
        for (i, level) in self.levels.iter().enumerate() {
            let n = i + 1;
            let at = |e: Error| Error::AtLevel { n, source: Box::new(e) };
            let theta = normalized_theta(level.nodes.len(), sub_seed(seed, n as u64)).map_err(at)?;
            let values: Vec<f64> = level
                .nodes
                .iter()
                .zip(&theta)
                .map(|(&t, th)| exact(t) + delta * th)
                .collect();
            let res = level.system.solve(&values).map_err(at)?;
            let coeffs = res.coeffs().expect("collocation yields a spline");
            let noise = NodeInterpolant::new(level.nodes.clone(), theta).map_err(at)?;
            let f_delta = |t: f64| exact(t) + delta * noise.value(t);
            residuals.push(level.system.sup_residual(coeffs, &f_delta));
            let u = &res.solution;
            let p = config.p;
            let integral = level.error_grid.integrate(|s| (u.value(s) - s.powf(r)).abs().powf(p));
            errors.push(integral.powf(1.0 / p));
        }
        Ok((errors, residuals))
    }

    fn row(&self, config: &ExperimentConfig, delta: f64, r: f64, seed: u64) -> Result<ExperimentRow> {
        let sweep = self.sweep(config, delta, r, seed);
        self.row_from(config, delta, r, seed, sweep)
    }

    fn row_from(
        &self,
        config: &ExperimentConfig,
        delta: f64,
        r: f64,
        seed: u64,
        sweep: Result<(Vec<f64>, Vec<f64>)>,
    ) -> Result<ExperimentRow> {
        let b_used = match config.b {
            Some(b) => b,
            None => default_b(self.c)?,
        };
        let mut row = ExperimentRow {
            c: self.c,
            delta,
            r,
            n_opt: None,
            e_opt: None,
            n_d: None,
            e_d: None,
            b_used,
            b_opt: None,
            r_b: None,
            r_e: None,
            seed,
            status: String::new(),
        };
        let (errors, residuals) = match sweep {
            Ok(x) => x,
            Err(e) => {
                row.status = format!("failed: {e}");
                return Ok(row);
            }
        };
        let (i_opt, &e_opt) = errors
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("n_max >= 1");
        row.n_opt = Some(i_opt + 1);
        row.e_opt = Some(e_opt);
        if delta == 0.0 {
            row.status = "no noise".into();
            return Ok(row);
        }
        let b_opt = residuals[i_opt] / delta;
        row.b_opt = Some(b_opt);
        row.r_b = Some(b_used / b_opt);
        let levels: Vec<usize> = (1..=errors.len()).collect();
        let trace = discrepancy_from_residuals(&levels, &residuals, delta, b_used)?;
        match trace.chosen_n {
            Some(n) => {
                row.n_d = Some(n);
                row.e_d = Some(errors[n - 1]);
                row.r_e = Some(errors[n - 1] / e_opt);
                row.status = "ok".into();
            }
            None => row.status = "not reached".into(),
        }
        Ok(row)
    }
}

/// Runs one cell of the experiment. Solver failures are reported as
/// [`Error::AtLevel`].
pub fn run_cell(config: &ExperimentConfig, c: f64, delta: f64, r: f64, seed: u64) -> Result<ExperimentRow> {
    config.validate()?;
    let kernel = Kernel::volterra(config.l)?;
    let cache = SweepCache::new(config, &kernel, c)?;
    let sweep = cache.sweep(config, delta, r, seed)?;
    cache.row_from(config, delta, r, seed, Ok(sweep))
}

/// Seed of repetition `rep` under base seed `seed`.
pub fn repetition_seed(seed: u64, rep: usize) -> u64 {
    sub_seed(seed, rep as u64)
}

/// All rows in the order `c, δ, r, repetition`, then one median row per
/// `(c, δ, r)` when there is more than one repetition.
///
/// Noise depends on the repetition and `n` only, so every `(c, δ, r)` cell
/// of a repetition sees the same `θ` (common random numbers).
pub fn run_table_rows(config: &ExperimentConfig) -> Result<(Vec<ExperimentRow>, Vec<AggregateRow>)> {
    config.validate()?;
    let kernel = Kernel::volterra(config.l)?;
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for &c in &config.c {
        let cache = SweepCache::new(config, &kernel, c)?;
        for &delta in &config.delta {
            for &r in &config.r {
                let start = rows.len();
                for rep in 0..config.repetitions {
                    rows.push(cache.row(config, delta, r, repetition_seed(config.seed, rep))?);
                }
                if config.repetitions > 1 {
                    aggregates.push(aggregate(&rows[start..], config.seed));
                }
            }
        }
    }
    Ok((rows, aggregates))
}

fn aggregate(rows: &[ExperimentRow], seed: u64) -> AggregateRow {
    let col = |f: &dyn Fn(&ExperimentRow) -> Option<f64>| median(&rows.iter().filter_map(f).collect::<Vec<_>>());
    let first = &rows[0];
    AggregateRow {
        c: first.c,
        delta: first.delta,
        r: first.r,
        n_opt: col(&|x| x.n_opt.map(|n| n as f64)),
        e_opt: col(&|x| x.e_opt),
        n_d: col(&|x| x.n_d.map(|n| n as f64)),
        e_d: col(&|x| x.e_d),
        b_used: first.b_used,
        b_opt: col(&|x| x.b_opt),
        r_b: col(&|x| x.r_b),
        r_e: col(&|x| x.r_e),
        seed,
        reached: rows.iter().filter(|x| x.n_d.is_some()).count(),
        repetitions: rows.len(),
    }
}

pub const TABLE_HEADER: [&str; 13] = [
    "c", "delta", "r", "n_opt", "e_opt", "n_D", "e_D", "b_used", "b_opt", "r_b", "r_e", "seed", "status",
];

fn opt_f(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6e}")).unwrap_or_default()
}

fn opt_n(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Writes rows then aggregates as CSV. `δ` is written in scientific notation.
pub fn write_table_csv<W: Write>(rows: &[ExperimentRow], aggregates: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_HEADER)?;
    for x in rows {
        w.write_record([
            x.c.to_string(),
            format!("{:e}", x.delta),
            x.r.to_string(),
            opt_n(x.n_opt),
            opt_f(x.e_opt),
            opt_n(x.n_d),
            opt_f(x.e_d),
            format!("{:.6}", x.b_used),
            opt_f(x.b_opt),
            opt_f(x.r_b),
            opt_f(x.r_e),
            x.seed.to_string(),
            x.status.clone(),
        ])?;
    }
    for x in aggregates {
        let med_n = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            x.c.to_string(),
            format!("{:e}", x.delta),
            x.r.to_string(),
            med_n(x.n_opt),
            opt_f(x.e_opt),
            med_n(x.n_d),
            opt_f(x.e_d),
            format!("{:.6}", x.b_used),
            opt_f(x.b_opt),
            opt_f(x.r_b),
            opt_f(x.r_e),
            x.seed.to_string(),
            format!("median ({}/{} reached)", x.reached, x.repetitions),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The full table as a CSV string.
pub fn run_table(config: &ExperimentConfig) -> Result<String> {
    let (rows, aggregates) = run_table_rows(config)?;
    let mut buf = Vec::new();
    write_table_csv(&rows, &aggregates, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Shared error grid type, exposed for callers that measure errors the same way.
pub fn error_grid(n: usize) -> Result<Arc<QuadratureGrid>> {
    let mesh = Mesh::new(n)?;
    Ok(Arc::new(QuadratureGrid::graded_at_zero(
        &mesh.breakpoints(),
        DEFAULT_QUADRATURE_ORDER,
        GRADING_LEVELS,
    )))
}
