//! Experiment configuration: flat `key = value` files whose keys match the
//! command-line flag names. Lists are comma separated.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Collocation,
    LeastSquares,
    LeastError,
}

impl FromStr for MethodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collocation" => Ok(Self::Collocation),
            "least-squares" => Ok(Self::LeastSquares),
            "least-error" => Ok(Self::LeastError),
            _ => Err(Error::Config(format!("unknown method '{s}'"))),
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Collocation => "collocation",
            Self::LeastSquares => "least-squares",
            Self::LeastError => "least-error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleChoice {
    Apriori,
    Dp,
    Me,
}

impl FromStr for RuleChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "apriori" => Ok(Self::Apriori),
            "dp" => Ok(Self::Dp),
            "me" => Ok(Self::Me),
            _ => Err(Error::Config(format!("unknown rule '{s}'"))),
        }
    }
}

impl fmt::Display for RuleChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Apriori => "apriori",
            Self::Dp => "dp",
            Self::Me => "me",
        })
    }
}

/// All experiment settings.
///
/// `r` is the exponent of the exact solution `u*(s) = s^r`, `p` the exponent
/// of `E = L^p` (and of the error norm), `r_exp` the exponent of `F = L^r`
/// for the least squares method. `b = None` means `b(c) = 1.01 + τ(c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub l: u32,
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub delta: Vec<f64>,
    pub k: usize,
    pub n_max: usize,
    pub b: Option<f64>,
    pub p: f64,
    pub r_exp: f64,
    pub method: MethodKind,
    pub rule: RuleChoice,
    /// Exponent `θ` of the a priori rule `n ~ δ^{-θ/l}`.
    pub theta: f64,
    pub seed: u64,
    pub repetitions: usize,
    /// Search budget for the stability estimates.
    pub budget: usize,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            l: 2,
            r: vec![0.5, 1.5],
            c: vec![0.6, 0.7, 0.8, 0.9],
            delta: (2..=7).map(|m| 10f64.powi(-m)).collect(),
            k: 2,
            n_max: 64,
            b: None,
            p: 1.0,
            r_exp: 2.0,
            method: MethodKind::Collocation,
            rule: RuleChoice::Dp,
            theta: 0.5,
            seed: 0,
            repetitions: 1,
            budget: 2000,
            out: None,
        }
    }
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for '{key}'")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_one(key, s))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Config(format!("'{key}' needs at least one value")));
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Sets one key. Keys use the flag spelling (`n-max`, `r-exp`); `_` is
    /// accepted in place of `-`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let v = value.trim();
        match key.as_str() {
            "l" => self.l = parse_one(&key, v)?,
            "r" => self.r = parse_list(&key, v)?,
            "c" => self.c = parse_list(&key, v)?,
            "delta" => self.delta = parse_list(&key, v)?,
            "k" => self.k = parse_one(&key, v)?,
            "n-max" => self.n_max = parse_one(&key, v)?,
            "b" => {
                self.b = match v {
                    "" | "auto" | "tau" => None,
                    _ => Some(parse_one(&key, v)?),
                }
            }
            "p" => self.p = parse_one(&key, v)?,
            "r-exp" => self.r_exp = parse_one(&key, v)?,
            "method" => self.method = v.parse()?,
            "rule" => self.rule = v.parse()?,
            "theta" => self.theta = parse_one(&key, v)?,
            "seed" => self.seed = parse_one(&key, v)?,
            "repetitions" => self.repetitions = parse_one(&key, v)?,
            "budget" => self.budget = parse_one(&key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines, `#`/`;` comments and
    /// `[section]` headers are skipped.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_str_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_str_kv(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.delta.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return bad("delta entries must be finite and nonnegative".into());
        }
        if self.n_max < 1 {
            return bad("n-max must be at least 1".into());
        }
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1".into());
        }
        if self.k < 1 || self.l < 1 {
            return bad("k and l must be at least 1".into());
        }
        if !(self.p >= 1.0) || !(self.r_exp > 1.0) {
            return bad("need p >= 1 and r-exp > 1".into());
        }
        if self.r.iter().any(|r| !(*r > -1.0)) {
            return bad("exact-solution exponents must exceed -1".into());
        }
        if let Some(b) = self.b {
            if !(b > 1.0) {
                return bad(format!("b must exceed 1, got {b}"));
            }
        }
        Ok(())
    }
}
