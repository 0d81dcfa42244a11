use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ctlseq::{cmd_figures, cmd_simulate, cmd_solve, cmd_stats, CliError, Format, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "ctlseq", version, about = "Controlled Bayesian sequential testing: solver, statistics and simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the control problem and write solution.json.
    Solve(Common),
    /// Monte Carlo simulation of the posterior until exit.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Closed-form operating characteristics of a threshold test.
    Stats(Common),
    /// Regenerate the figure data as CSV.
    Figures(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(common: &Common, required: bool) -> Result<RunConfig, CliError> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None if required => Err(CliError::Config {
            line: None,
            msg: "--config is required".into(),
        }),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, seed, paths, dt) = match &cli.command {
        Command::Solve(c) | Command::Stats(c) | Command::Figures(c) => (c, None, None, None),
        Command::Simulate { common, seed, paths, dt } => (common, *seed, *paths, *dt),
    };
    let mut cfg = load(common, !matches!(cli.command, Command::Figures(_)))?;
    cfg.apply(&Overrides {
        out: common.out.clone(),
        format: common.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        seed,
        paths,
        dt,
    })?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Solve(_) => cmd_solve(&cfg, &mut out),
        Command::Simulate { .. } => cmd_simulate(&cfg, &mut out),
        Command::Stats(_) => cmd_stats(&cfg, &mut out),
        Command::Figures(_) => cmd_figures(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
