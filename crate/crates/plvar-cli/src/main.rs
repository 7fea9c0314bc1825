use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plvar_cli::commands::{self, EvaluateTarget, LearnArgs, SimulateArgs};
use plvar_cli::{configure_threads, CliResult};

#[derive(Parser)]
#[command(name = "plvar", version, about = "Sparse Gaussian VAR structure learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a sparse VAR model from a CSV time series and write it as JSON.
    Learn(Learn),
    /// Draw a random stable sparse VAR model and a series from it.
    Simulate(Simulate),
    /// Score a model against a ground truth, or its one-step predictions on test data.
    Evaluate(Evaluate),
}

#[derive(Args)]
struct Learn {
    /// CSV file, one row per time step, optional header.
    data: PathBuf,
    /// Largest lag length considered.
    #[arg(long, default_value_t = 5)]
    max_lag: usize,
    /// Strength of the sparsity prior.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Do not subtract column means.
    #[arg(long)]
    no_center: bool,
    /// Remove a linear trend from each column first.
    #[arg(long)]
    detrend: bool,
    /// Convergence threshold on the log-likelihood for parameter fitting.
    #[arg(long, default_value_t = 1e-6)]
    delta: f64,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Output model JSON.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct Simulate {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    k: usize,
    /// Expected temporal indegree.
    #[arg(long)]
    q: f64,
    /// Number of observations.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    /// Output prefix; writes <prefix>.csv and <prefix>.truth.json.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct Evaluate {
    /// Model JSON written by `learn`.
    model: PathBuf,
    /// Ground-truth JSON written by `simulate`.
    #[arg(long, conflicts_with = "test", required_unless_present = "test")]
    truth: Option<PathBuf>,
    /// Held-out CSV for one-step prediction error.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Do not subtract the test data's column means.
    #[arg(long)]
    no_center: bool,
    /// Also write the metrics as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Learn(a) => {
            let args = LearnArgs {
                data: a.data,
                max_lag: a.max_lag,
                gamma: a.gamma,
                center: !a.no_center,
                detrend: a.detrend,
                delta: a.delta,
                execution: configure_threads(a.threads)?,
                out: a.out,
            };
            println!("{}", commands::learn(&args)?);
        }
        Command::Simulate(a) => {
            let args = SimulateArgs { d: a.d, k: a.k, q: a.q, n: a.n, seed: a.seed, burn_in: a.burn_in, out: a.out };
            let (csv, json) = commands::simulate(&args)?;
            println!("wrote {} and {}", csv.display(), json.display());
        }
        Command::Evaluate(a) => {
            let target = match (a.truth, a.test) {
                (Some(t), _) => EvaluateTarget::Truth(t),
                (None, Some(path)) => EvaluateTarget::Test { path, center: !a.no_center },
                (None, None) => unreachable!("clap requires one of --truth and --test"),
            };
            println!("{}", commands::evaluate(&a.model, &target, a.json.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
