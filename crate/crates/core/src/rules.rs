//! Choosing the discretization level: a priori rule, discrepancy principle,
//! monotone error rule, plus collocation-parameter admissibility.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::operators::{validate_parameters, DiracCombo};
use crate::solvers::SolveResult;

/// The constant `τ(c)` bounding `||Aw||_C / max_nodes |Aw|` asymptotically for
/// linear splines collocated at `(i-1+c)h` and `ih` with `l = 2`.
pub fn tau_of_c(c: f64) -> Result<f64> {
    if !(c > 0.5 && c < 1.0) {
        return Err(Error::Domain(format!("τ(c) needs 0.5 < c < 1, got {c}")));
    }
    let y = c * (-2.0 * c.powi(3) + c * c + 1.0);
    let num = 4.0 * (y * y - y + 1.0).powf(1.5) - 4.0 * y.powi(3) + 6.0 * y * y + 6.0 * y - 4.0;
    let den = 27.0 * y * y * (2.0 * c - 1.0) * (1.0 - c);
    Ok(1.0 + num / den)
}

/// Default discrepancy constant `b(c) = 1.01 + τ(c)`.
pub fn default_b(c: f64) -> Result<f64> {
    Ok(1.01 + tau_of_c(c)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admissibility {
    Admissible,
    Inadmissible,
    /// No convergence criterion is known for this kernel order.
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// `∏ (1 - c_j)/c_j` over all `j` (`l = 1`) or `j < k` (`l >= 2`).
    pub product: f64,
    pub verdict: Admissibility,
}

/// Known convergence conditions for collocation of the Volterra equation of
/// order `l`: `∏ (1-c_j)/c_j < 1` for `l = 1`; `c_k = 1` and
/// `∏_{j<k} (1-c_j)/c_j < 1` for `l = 2`. Larger `l` gives `Unknown`.
pub fn check_collocation_params(c: &[f64], l: u32) -> Result<AdmissibilityReport> {
    validate_parameters(c)?;
    if l < 1 {
        return Err(Error::Domain("kernel order l must be >= 1".into()));
    }
    let ratio = |x: &f64| (1.0 - x) / x;
    let k = c.len();
    let (product, verdict) = match l {
        1 => {
            let p: f64 = c.iter().map(ratio).product();
            (p, if p < 1.0 { Admissibility::Admissible } else { Admissibility::Inadmissible })
        }
        2 => {
            let p: f64 = c[..k - 1].iter().map(ratio).product();
            let v = if c[k - 1] != 1.0 {
                Admissibility::Unknown
            } else if p < 1.0 {
                Admissibility::Admissible
            } else {
                Admissibility::Inadmissible
            };
            (p, v)
        }
        _ => (c[..k - 1].iter().map(ratio).product(), Admissibility::Unknown),
    };
    Ok(AdmissibilityReport { product, verdict })
}

/// `n = max(1, floor(δ^{-θ/l}))`.
pub fn choose_n_apriori(delta: f64, l: u32, theta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("δ must be positive, got {delta}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("θ must lie in (0, 1), got {theta}")));
    }
    if l < 1 {
        return Err(Error::Domain("kernel order l must be >= 1".into()));
    }
    // guard exact powers such as 1e-4^{-1/4} = 10 against rounding down
    let x = delta.powf(-theta / f64::from(l)) * (1.0 + 1e-12);
    Ok((x.floor() as usize).max(1))
}

/// The levels a rule walks through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NFamily {
    /// `start, start + 1, ..., n_max`
    Consecutive { start: usize, n_max: usize },
    /// `start, 2 start, 4 start, ... <= n_max`
    Dyadic { start: usize, n_max: usize },
}

impl NFamily {
    pub fn levels(&self) -> Vec<usize> {
        match *self {
            Self::Consecutive { start, n_max } => (start.max(1)..=n_max).collect(),
            Self::Dyadic { start, n_max } => {
                let mut out = Vec::new();
                let mut n = start.max(1);
                while n <= n_max {
                    out.push(n);
                    n *= 2;
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Apriori,
    Discrepancy,
    MonotoneError,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Apriori => "apriori",
            Self::Discrepancy => "dp",
            Self::MonotoneError => "me",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Continue,
    Stop,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Continue => "continue",
            Self::Stop => "stop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub n: usize,
    /// `d_DP(n)` or `d_ME(n)`
    pub criterion_value: f64,
    pub decision: Decision,
}

/// Per-level record of a stopping rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleTrace {
    pub rule: RuleKind,
    /// `b` for the discrepancy principle, `δ` for the monotone error rule.
    pub parameter: f64,
    pub delta: f64,
    pub records: Vec<TraceRecord>,
    pub chosen_n: Option<usize>,
    /// Level and message of a solver failure that ended the trace.
    pub failure: Option<(usize, String)>,
}

impl RuleTrace {
    fn new(rule: RuleKind, parameter: f64, delta: f64) -> Self {
        Self {
            rule,
            parameter,
            delta,
            records: Vec::new(),
            chosen_n: None,
            failure: None,
        }
    }

    pub fn reached(&self) -> bool {
        self.chosen_n.is_some()
    }

    pub fn status(&self) -> &'static str {
        match (self.chosen_n, &self.failure) {
            (Some(_), _) => "ok",
            (None, Some(_)) => "failed",
            (None, None) => "not reached",
        }
    }

    /// CSV with columns `n, criterion_value, decision`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "criterion_value", "decision"])?;
        for r in &self.records {
            w.write_record([
                r.n.to_string(),
                format!("{:.12e}", r.criterion_value),
                r.decision.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn check_discrepancy_inputs(delta: f64, b: f64) -> Result<()> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("δ must be positive, got {delta}")));
    }
    if !(b > 1.0 && b.is_finite()) {
        return Err(Error::Domain(format!("discrepancy constant must exceed 1, got {b}")));
    }
    Ok(())
}

/// Discrepancy principle over precomputed residuals `d_DP(n)`: the first
/// level with `d_DP(n) <= bδ`.
pub fn discrepancy_from_residuals(levels: &[usize], residuals: &[f64], delta: f64, b: f64) -> Result<RuleTrace> {
    check_discrepancy_inputs(delta, b)?;
    if levels.len() != residuals.len() {
        return Err(Error::Dimension("one residual per level expected".into()));
    }
    let mut trace = RuleTrace::new(RuleKind::Discrepancy, b, delta);
    for (&n, &d) in levels.iter().zip(residuals) {
        let stop = d <= b * delta;
        trace.records.push(TraceRecord {
            n,
            criterion_value: d,
            decision: if stop { Decision::Stop } else { Decision::Continue },
        });
        if stop {
            trace.chosen_n = Some(n);
            break;
        }
    }
    Ok(trace)
}

/// Discrepancy principle: solves level by level and stops at the first `n`
/// whose `residual_c <= bδ`.
pub fn choose_n_discrepancy<F>(family: NFamily, mut solve_at: F, delta: f64, b: f64) -> Result<RuleTrace>
where
    F: FnMut(usize) -> Result<SolveResult>,
{
    check_discrepancy_inputs(delta, b)?;
    let mut trace = RuleTrace::new(RuleKind::Discrepancy, b, delta);
    for n in family.levels() {
        let res = match solve_at(n) {
            Ok(r) => r,
            Err(e) => {
                trace.failure = Some((n, e.to_string()));
                return Ok(trace);
            }
        };
        let stop = res.residual_c <= b * delta;
        trace.records.push(TraceRecord {
            n,
            criterion_value: res.residual_c,
            decision: if stop { Decision::Stop } else { Decision::Continue },
        });
        if stop {
            trace.chosen_n = Some(n);
            break;
        }
    }
    Ok(trace)
}

/// `d_ME(n) = <v_{n+1} - v_n, f^δ> / (q ||v_{n+1} - v_n||)`, with `f^δ` given
/// at the nodes of `v_next` and `v_n` embedded into those nodes.
pub fn me_index(v_n: &DiracCombo, v_next: &DiracCombo, f_delta_next: &[f64], q: f64) -> Result<f64> {
    let coarse = v_n.embed_into(v_next.nodes())?;
    let diff = v_next.sub(&coarse)?;
    let norm = diff.norm();
    let scale = v_next.norm().max(coarse.norm());
    if norm == 0.0 || norm <= 1e-14 * scale {
        return Err(Error::UndefinedIndex);
    }
    Ok(diff.pair_values(f_delta_next)? / (q * norm))
}

/// One level of a monotone-error run: the least error solution and the data
/// at that level's nodes.
pub struct MeLevel {
    pub result: SolveResult,
    pub values: Vec<f64>,
}

/// Monotone error rule over a nested family: stops at the first `n` with
/// `δ > d_ME(n)`. `d_ME(n)` needs level `n`'s successor, so the last level
/// of the family can never be chosen.
pub fn choose_n_monotone_error<F>(levels: &[usize], mut solve_at: F, delta: f64, q: f64) -> Result<RuleTrace>
where
    F: FnMut(usize) -> Result<MeLevel>,
{
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("δ must be nonnegative, got {delta}")));
    }
    let mut trace = RuleTrace::new(RuleKind::MonotoneError, delta, delta);
    let mut prev: Option<(usize, DiracCombo)> = None;
    for &n in levels {
        let level = match solve_at(n) {
            Ok(l) => l,
            Err(e) => {
                trace.failure = Some((n, e.to_string()));
                return Ok(trace);
            }
        };
        let v = level
            .result
            .dual
            .clone()
            .ok_or_else(|| Error::Domain("monotone error rule needs least error solutions".into()))?;
        if let Some((pn, pv)) = prev.take() {
            let d = match me_index(&pv, &v, &level.values, q) {
                Ok(d) => d,
                Err(e) => {
                    trace.failure = Some((pn, e.to_string()));
                    return Ok(trace);
                }
            };
            let stop = delta > d;
            trace.records.push(TraceRecord {
                n: pn,
                criterion_value: d,
                decision: if stop { Decision::Stop } else { Decision::Continue },
            });
            if stop {
                trace.chosen_n = Some(pn);
                return Ok(trace);
            }
        }
        prev = Some((n, v));
    }
    Ok(trace)
}
