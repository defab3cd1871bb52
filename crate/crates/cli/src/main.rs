use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermometry_cli::config::parse_count;
use thermometry_cli::{run, write_artifacts, CliError, Command, ExperimentConfig, Overrides};

/// Global Bayesian thermometry experiments. Every run writes CSV with a
/// leading `# thermometry <version> config=<hash> seed=<seed>` line.
#[derive(Debug, Parser)]
#[command(name = "thermometry", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Optimal, local and flat-prior bounds over a sweep of spin counts
    Bounds,
    /// Sequential global and local estimates along one simulated record
    Sequential,
    /// Global estimates and histogram fits for oscillator positions
    Oscillator,
    /// Power-law fit of the local-bound gap, from a bounds CSV or a fresh sweep
    Fit {
        /// Bounds CSV to fit instead of recomputing the sweep
        input: Option<PathBuf>,
        /// Relative tolerance for the implied spin count
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Simulate a measurement record and write it as a trace CSV
    Simulate,
    /// Estimate temperature from a trace CSV
    Estimate {
        /// Trace CSV written by `simulate`
        input: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Flags {
    /// spin-gas or oscillator
    #[arg(long, global = true)]
    model: Option<String>,
    /// Number of spins
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    ymin: Option<f64>,
    #[arg(long, global = true)]
    ymax: Option<f64>,
    /// Quadrature nodes in log temperature
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long = "true-y", global = true)]
    true_y: Option<f64>,
    /// Number of measurements
    #[arg(long, global = true)]
    mu: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hint temperature for the local estimator
    #[arg(long, global = true)]
    theta0: Option<f64>,
    /// Comma-separated spin counts
    #[arg(long = "n-sweep", global = true, value_delimiter = ',', value_parser = parse_count)]
    n_sweep: Option<Vec<u32>>,
    /// Output CSV path; companions are written beside it. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key = value configuration file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

fn resolve(cli: Cli) -> Result<ExperimentConfig, CliError> {
    let f = cli.flags;
    let mut flags = Overrides {
        model: f.model,
        n: f.n,
        y_min: f.ymin,
        y_max: f.ymax,
        nodes: f.nodes,
        true_y: f.true_y,
        mu: f.mu,
        seed: f.seed,
        theta0: f.theta0,
        n_sweep: f.n_sweep,
        out: f.out,
        ..Default::default()
    };
    let command = match cli.command {
        Cmd::Bounds => Command::Bounds,
        Cmd::Sequential => Command::Sequential,
        Cmd::Oscillator => Command::Oscillator,
        Cmd::Fit { input, tau } => {
            flags.input = input;
            flags.tau = tau;
            Command::Fit
        }
        Cmd::Simulate => Command::Simulate,
        Cmd::Estimate { input } => {
            flags.input = Some(input);
            Command::Estimate
        }
    };
    let merged = match &f.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            flags.or(Overrides::parse(&text)?)
        }
        None => flags,
    };
    ExperimentConfig::resolve(command, merged)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli).and_then(|cfg| {
        let artifacts = run(&cfg)?;
        write_artifacts(cfg.out.as_deref(), &artifacts)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
