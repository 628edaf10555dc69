use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use ncrat::hankel::{RankMode, DEFAULT_REL_TOL};
use ncrat::pipeline::{self, JobReport, PipelineParams};
use ncrat::RationalExpr;

#[derive(Parser)]
#[command(
    name = "ncrat",
    version,
    about = "Rationality certificates for noncommutative series and free semicircular operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Also write the JSON report here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Numeric,
}

impl From<Mode> for RankMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Exact => RankMode::Exact,
            Mode::Numeric => RankMode::Numeric,
        }
    }
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long, default_value_t = 4)]
    kmax: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    #[arg(long = "rel-tol", default_value_t = DEFAULT_REL_TOL)]
    rel_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Hankel rank stabilization certificate for a coefficient table.
    Rank(RankArgs),
    /// Reachability/observability reduction of a linear representation.
    Minimize {
        #[arg(long)]
        rep: PathBuf,
    },
    /// Learn a linear representation from the Hankel block of depth `kmax`.
    Learn(RankArgs),
    /// Neumann reconstruction of `Σ α_v Û_v` from a linear representation.
    Realize {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long = "N", default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 40)]
        mmax: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Exact operator identities on the truncated Fock space.
    FockVerify {
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "N", default_value_t = 6)]
        n: usize,
    },
    /// One-variable Hankel rank and recursion of a coefficient list.
    Kronecker1d {
        #[arg(long)]
        coeffs: PathBuf,
    },
    /// Norm bounds for a homogeneous coefficient family (series JSON).
    Haagerup {
        #[arg(long)]
        coeffs: PathBuf,
        /// Truncation; defaults to the family degree plus 4.
        #[arg(long = "N")]
        n: Option<usize>,
    },
    /// Expression to series, certificate, representation, reconstruction and commutator ranks.
    Pipeline {
        #[arg(long)]
        expr: String,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "N", default_value_t = 12)]
        n: usize,
        #[arg(long = "L", default_value_t = 10)]
        l: usize,
        #[arg(long, default_value_t = 4)]
        kmax: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long = "rel-tol", default_value_t = DEFAULT_REL_TOL)]
        rel_tol: f64,
        #[arg(long, default_value_t = 40)]
        mmax: usize,
        #[arg(long = "residual-tol", default_value_t = 1e-6)]
        residual_tol: f64,
        /// Largest working Fock dimension for truncated solves.
        #[arg(long, default_value_t = 4096)]
        budget: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Rank(_) => "rank",
            Command::Minimize { .. } => "minimize",
            Command::Learn(_) => "learn",
            Command::Realize { .. } => "realize",
            Command::FockVerify { .. } => "fock-verify",
            Command::Kronecker1d { .. } => "kronecker1d",
            Command::Haagerup { .. } => "haagerup",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}

fn run(command: &Command) -> Result<JobReport> {
    match command {
        Command::Rank(a) => {
            let z = pipeline::load_series(&a.series)?;
            pipeline::rank(&z, a.kmax, a.mode.into(), a.rel_tol)
        }
        Command::Minimize { rep } => pipeline::minimize(&pipeline::load_representation(rep)?),
        Command::Learn(a) => {
            let z = pipeline::load_series(&a.series)?;
            pipeline::learn(&z, a.kmax, a.mode.into(), a.rel_tol)
        }
        Command::Realize { rep, n, mmax, tol } => {
            pipeline::realize(&pipeline::load_representation(rep)?, *n, *mmax, *tol)
        }
        Command::FockVerify { d, n } => pipeline::fock_verify(*d, *n),
        Command::Kronecker1d { coeffs } => pipeline::kronecker1d(&pipeline::load_coeffs(coeffs)?),
        Command::Haagerup { coeffs, n } => pipeline::haagerup(&pipeline::load_series(coeffs)?, *n),
        Command::Pipeline {
            expr,
            d,
            n,
            l,
            kmax,
            tol,
            rel_tol,
            mmax,
            residual_tol,
            budget,
        } => {
            let e: RationalExpr = expr.parse().context("parsing --expr")?;
            pipeline::pipeline(
                &e,
                &PipelineParams {
                    d: *d,
                    n: *n,
                    l: *l,
                    k_max: *kmax,
                    tol: *tol,
                    rel_tol: *rel_tol,
                    m_max: *mmax,
                    residual_tol: *residual_tol,
                    budget: *budget,
                },
            )
        }
    }
}

fn emit(report: &Value, out: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    if let Err(e) = writeln!(io::stdout(), "{text}") {
        if e.kind() != io::ErrorKind::BrokenPipe {
            return Err(e.into());
        }
    }
    if let Some(path) = out {
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (report, code) = match run(&cli.command) {
        Ok(job) => (job.report, job.outcome.exit_code()),
        Err(e) => (pipeline::error_report(cli.command.name(), &e), 1),
    };
    if let Err(e) = emit(&report, cli.out.as_ref()) {
        eprintln!("ncrat: {e:#}");
        return ExitCode::from(1);
    }
    ExitCode::from(code as u8)
}
