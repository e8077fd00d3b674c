//! `freeprob`: runs verification scenarios for semicircular models and writes
//! machine-readable reports.
//!
//! Exit status: 0 when every task passes, 1 when a task fails, 2 on usage,
//! parse, or validation errors.

mod report;
mod scenario;
mod tasks;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use freeprob_core::ncpoly::parse_poly;
use freeprob_core::rational;
use freeprob_core::state::SemicircularState;

use report::Report;
use scenario::{model_dim, model_from_path, Scenario, Task};

#[derive(Parser)]
#[command(name = "freeprob", version, about = "Free-probability verification scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Number of generators.
    #[arg(short = 'n', long = "generators")]
    n: Option<usize>,
    /// Truncation degree.
    #[arg(short = 'd', long = "degree")]
    degree: Option<usize>,
    /// Model file (TOML or JSON) with `covariance` or `quadratic_form`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Spectral tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json and CSV outputs.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timestamps so identical inputs give byte-identical reports.
    #[arg(long)]
    canonical: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task of a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Spectrum of the truncated free Laplacian.
    Spectrum(Common),
    /// Free Poincare constant on the truncation.
    Poincare(Common),
    /// Obata rigidity pipeline.
    Rigidity(Common),
    /// Curvature-dimension certificate.
    Cd(Common),
    /// Exact trace of a polynomial.
    Trace {
        polynomial: String,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Tasks,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tasks) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { scenario, common } => {
            let sc = Scenario::from_path(&scenario)?;
            execute(apply(sc, &common)?, &common, Some(Path::new("freeprob-out")))
        }
        Command::Spectrum(c) => adhoc(Task::Spectrum, &c),
        Command::Poincare(c) => adhoc(Task::Poincare, &c),
        Command::Rigidity(c) => adhoc(Task::Rigidity, &c),
        Command::Cd(c) => adhoc(Task::Cd, &c),
        Command::Trace { polynomial, common } => trace(&polynomial, &common),
    }
}

fn apply(mut sc: Scenario, c: &Common) -> Result<Scenario> {
    if let Some(n) = c.n {
        sc.n = n;
    }
    if let Some(d) = c.degree {
        sc.degree = d;
    }
    if let Some(path) = &c.model {
        sc.model = model_from_path(path)?;
    }
    if let Some(t) = c.tol {
        sc.tolerances.spectral = t;
    }
    if let Some(s) = c.seed {
        sc.seed = s;
    }
    if let Some(o) = &c.out {
        sc.out = Some(o.clone());
    }
    Ok(sc)
}

fn model_n(c: &Common) -> Result<Option<usize>> {
    match &c.model {
        Some(p) => Ok(model_dim(&model_from_path(p)?)),
        None => Ok(None),
    }
}

fn adhoc(task: Task, c: &Common) -> Result<(), Failure> {
    let n = match (c.n, model_n(c)?) {
        (Some(n), _) | (None, Some(n)) => n,
        (None, None) => 2,
    };
    let sc = apply(Scenario::adhoc(n, c.degree.unwrap_or(4), task), c)?;
    execute(sc, c, None)
}

fn execute(sc: Scenario, c: &Common, default_out: Option<&Path>) -> Result<(), Failure> {
    let env = sc.resolve()?;
    let outcomes: Vec<_> = sc
        .tasks
        .iter()
        .map(|&t| {
            let o = tasks::run_task(t, &sc, &env);
            say(&format!("{} [{}] {} (tol {:e})", if o.passed { "PASS" } else { "FAIL" }, o.task, o.summary, o.tolerance));
            o
        })
        .collect();
    let report = Report::new(&sc, &outcomes, c.canonical);
    if let Some(dir) = sc.out.as_deref().or(default_out) {
        report.write(dir)?;
        say(&format!("wrote {}", dir.join("report.json").display()));
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Tasks)
    }
}

fn say(line: &str) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn trace(text: &str, c: &Common) -> Result<(), Failure> {
    let n = match (c.n, model_n(c)?) {
        (Some(n), Some(m)) if n != m => return Err(anyhow!("-n {n} does not match the {m}-dimensional model").into()),
        (Some(n), _) | (None, Some(n)) => Some(n),
        (None, None) => None,
    };
    let mut p = parse_poly(text, n).map_err(|e| anyhow!("{e}"))?;
    if p.n() == 0 {
        p = parse_poly(text, Some(1)).map_err(|e| anyhow!("{e}"))?;
    }
    let n = p.n();
    let model = c.model.as_ref().map(|path| model_from_path(path)).transpose()?.unwrap_or_default().build(n)?;
    let state = SemicircularState::new(model);
    say(&rational::format(&state.trace(&p)));
    Ok(())
}
