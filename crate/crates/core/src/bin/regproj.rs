use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regproj::harness::{run_table, solve_problem, stability_sweep, ExperimentConfig};
use regproj::rules::{default_b, tau_of_c};
use regproj::stability::{kappa_chain_check, write_reports_csv};

#[derive(Parser)]
#[command(name = "regproj", version, about = "Projection methods for first-kind Volterra equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one noisy model problem and choose n by a rule
    Solve(Common),
    /// Run the n_opt / n_D experiment and write CSV
    Table(Common),
    /// Estimate stability constants on dyadic n
    Stability(Common),
    /// Print τ(c) and the default discrepancy constant
    Tau(Common),
}

/// Every flag mirrors a config-file key; flags override the file.
#[derive(Args, Default)]
struct Common {
    /// Flat key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Output CSV path (stdout if absent)
    #[arg(long)]
    out: Option<String>,
    /// Collocation parameter(s), comma separated
    #[arg(long)]
    c: Option<String>,
    /// Noise level(s), comma separated
    #[arg(long)]
    delta: Option<String>,
    /// Exact solution exponent(s) for u*(s) = s^r
    #[arg(long)]
    r: Option<String>,
    #[arg(long = "n-max")]
    n_max: Option<String>,
    /// Trial functions per cell
    #[arg(long)]
    k: Option<String>,
    /// Order of the Volterra kernel (t-s)^(l-1)
    #[arg(long)]
    l: Option<String>,
    /// collocation | least-squares | least-error
    #[arg(long)]
    method: Option<String>,
    /// apriori | dp | me
    #[arg(long)]
    rule: Option<String>,
    /// Discrepancy constant (default 1.01 + τ(c))
    #[arg(long)]
    b: Option<String>,
    /// Exponent of E = L^p and of the error norm
    #[arg(long)]
    p: Option<String>,
    /// Exponent of F = L^r for least squares
    #[arg(long = "r-exp")]
    r_exp: Option<String>,
    #[arg(long)]
    repetitions: Option<String>,
    /// Search budget for stability estimates
    #[arg(long)]
    budget: Option<String>,
}

impl Common {
    fn config(&self) -> regproj::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_str(&std::fs::read_to_string(path)?)?;
        }
        let flags = [
            ("seed", &self.seed),
            ("out", &self.out),
            ("c", &self.c),
            ("delta", &self.delta),
            ("r", &self.r),
            ("n-max", &self.n_max),
            ("k", &self.k),
            ("l", &self.l),
            ("method", &self.method),
            ("rule", &self.rule),
            ("b", &self.b),
            ("p", &self.p),
            ("r-exp", &self.r_exp),
            ("repetitions", &self.repetitions),
            ("budget", &self.budget),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn output(cfg: &ExperimentConfig) -> regproj::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: Cli) -> regproj::Result<()> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = args.config()?;
            let report = solve_problem(&cfg)?;
            eprintln!(
                "method={} rule={} n={} residual={:.6e} error={:.6e} converged={}",
                cfg.method, cfg.rule, report.n, report.residual, report.error, report.result.converged
            );
            for w in &report.result.warnings {
                eprintln!("warning: {w}");
            }
            match &report.trace {
                Some(trace) => {
                    eprintln!("status: {}", trace.status());
                    trace.write_csv(output(&cfg)?)?;
                }
                None => writeln!(output(&cfg)?, "n,residual,error\n{},{:.12e},{:.12e}", report.n, report.residual, report.error)?,
            }
        }
        Command::Table(args) => {
            let cfg = args.config()?;
            output(&cfg)?.write_all(run_table(&cfg)?.as_bytes())?;
        }
        Command::Stability(args) => {
            let cfg = args.config()?;
            let reports = stability_sweep(&cfg)?;
            for r in &reports {
                let chain = kappa_chain_check(r);
                if !chain.holds {
                    eprintln!("n={}: chain κ ≤ κ̃ ≤ τκ violated ({chain:?})", r.n);
                }
            }
            write_reports_csv(&reports, output(&cfg)?)?;
        }
        Command::Tau(args) => {
            let cfg = args.config()?;
            let mut out = output(&cfg)?;
            writeln!(out, "c,tau,b")?;
            for &c in &cfg.c {
                writeln!(out, "{c},{:.6},{:.6}", tau_of_c(c)?, default_b(c)?)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
