use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hexp_cli::{exit_code, CliResult, Overrides, RunConfig, Suite, VerificationReport};

/// Verify the exponential change of a Finsler metric by an h-vector.
#[derive(Parser)]
#[command(name = "hexp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a check suite and write a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Integrate base and changed geodesics, export traces, compare paths.
    Geodesic {
        #[command(flatten)]
        run: RunArgs,
        /// Traces go to PREFIX.base.txt and PREFIX.changed.txt; defaults to
        /// the report path without extension, or `geodesic`.
        #[arg(long)]
        trace_prefix: Option<PathBuf>,
    },
    /// Merge reports; the ledger is deduplicated.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of sampled points [default: 128]
    #[arg(long)]
    samples: Option<usize>,
    /// Sampling seed [default: 42]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol_algebraic: Option<f64>,
    #[arg(long)]
    tol_tensors: Option<f64>,
    #[arg(long)]
    tol_connection: Option<f64>,
    #[arg(long)]
    tol_berwald: Option<f64>,
    #[arg(long)]
    tol_geodesic: Option<f64>,
    /// Report path; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> CliResult<RunConfig> {
        let ov = Overrides {
            samples: self.samples,
            seed: self.seed,
            tol_algebraic: self.tol_algebraic,
            tol_tensors: self.tol_tensors,
            tol_connection: self.tol_connection,
            tol_berwald: self.tol_berwald,
            tol_geodesic: self.tol_geodesic,
        };
        RunConfig::load(&self.config, &ov)
    }
}

fn emit(report: &VerificationReport, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(path) => report.write(path),
        None => {
            print!("{}", report.to_json());
            Ok(())
        }
    }
}

fn summarize(report: &VerificationReport) {
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: max_abs {:e}, max_rel {:e}, tol {:e}", c.check, c.max_abs, c.max_rel, c.tol);
    }
    eprintln!(
        "{} checks, {}",
        report.checks.len(),
        if report.pass { "all passed" } else { "some failed" }
    );
}

fn execute(cli: Cli) -> CliResult<VerificationReport> {
    let report = match cli.command {
        Command::Verify { suite, run } => {
            let report = hexp_cli::verify(&run.load()?, suite)?;
            emit(&report, run.out.as_ref())?;
            report
        }
        Command::Geodesic { run, trace_prefix } => {
            let (report, traces) = hexp_cli::geodesic(&run.load()?)?;
            let prefix = trace_prefix
                .or_else(|| run.out.as_ref().map(|p| p.with_extension("")))
                .unwrap_or_else(|| PathBuf::from("geodesic"));
            let (a, b) = hexp_cli::geodesic::write_traces(&traces, &prefix)?;
            eprintln!("traces written to {} and {}", a.display(), b.display());
            emit(&report, run.out.as_ref())?;
            report
        }
        Command::Report { inputs, out } => {
            let report = hexp_cli::merge_reports(&inputs)?;
            emit(&report, out.as_ref())?;
            report
        }
    };
    summarize(&report);
    Ok(report)
}

fn main() -> ExitCode {
    let result = execute(Cli::parse());
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&result))
}
