use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use condnet_cli::config::parse_betas;
use condnet_cli::{commands, CliError, Overrides, RunConfig};

/// Design feed-forward networks from the conditioning of their weight matrices.
#[derive(Parser)]
#[command(name = "condnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Wrapper so clap treats the whole list as one value.
#[derive(Clone)]
struct Betas(Vec<f64>);

#[derive(Args)]
struct StageArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated scale factors, e.g. `0.6,0.8,1.0`.
    #[arg(long, value_parser = |s: &str| parse_betas(s).map(Betas))]
    betas: Option<Betas>,
    /// Trainings averaged per scale factor.
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Run directory, overriding `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl StageArgs {
    fn config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            seed: self.seed,
            tau: self.tau,
            eta: self.eta,
            betas: self.betas.clone().map(|b| b.0),
            q: self.q,
            jobs: self.jobs,
            out: self.out.clone(),
        });
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Read the raw dataset files and write train/validation/test containers.
    Ingest(StageArgs),
    /// Shrink over-conditioned layers until every layer is below tau.
    Proportion(StageArgs),
    /// Pick a width multiplier by partial training, then fully train it.
    Scale(StageArgs),
    /// One squeeze pass over a trained model, optionally retrained.
    Squeeze {
        #[command(flatten)]
        stage: StageArgs,
        /// Model to squeeze (defaults to the scaled, then the trained model).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Squeeze and retrain until a round removes nothing.
    SqueezeLoop {
        #[command(flatten)]
        stage: StageArgs,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Fully train the configured network without any design step.
    Train(StageArgs),
    /// Error rates and per-layer condition numbers of a model.
    Eval {
        model: PathBuf,
        #[arg(required = true)]
        datasets: Vec<PathBuf>,
        /// Also write the tables under DIR/reports.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate CSV and markdown tables from a run directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a.config()?),
        Command::Proportion(a) => commands::proportion(&a.config()?),
        Command::Scale(a) => commands::scale(&a.config()?),
        Command::Squeeze { stage, model } => commands::squeeze(&stage.config()?, model.as_deref()),
        Command::SqueezeLoop { stage, model } => commands::squeeze_loop(&stage.config()?, model.as_deref()),
        Command::Train(a) => commands::train(&a.config()?),
        Command::Eval { model, datasets, out } => {
            print!("{}", commands::eval(&model, &datasets, out.as_deref())?);
            Ok(())
        }
        Command::Report { out } => {
            for p in commands::report(&out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("condnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
