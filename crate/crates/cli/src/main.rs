use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opsize::experiments::{self, Backend, ExperimentConfig, Report};
use opsize::Error;

#[derive(Parser)]
#[command(name = "opsize", version, about = "Operator-size growth experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Noiseless size growth with the exact reference curve.
    SizeGrowth(Common),
    /// Trotter error against time and against step count.
    TrotterError(Common),
    /// Size curves under depolarizing noise.
    Noise(Common),
    /// Richardson zero-noise extrapolation.
    Mitigate(Common),
    /// Parse and check a config without running anything.
    ValidateConfig(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Base seed for sampling and trajectories.
    #[arg(long)]
    seed: Option<u64>,
    /// statevector, dm or trajectory.
    #[arg(long, value_parser = parse_backend)]
    backend: Option<Backend>,
}

fn parse_backend(s: &str) -> Result<Backend, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn load(&self) -> opsize::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_path(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(backend) = self.backend {
            cfg.noise.backend = Some(backend);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invariant(_) | Error::NotNormalized(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> opsize::Result<()> {
    let (common, runner): (
        &Common,
        Option<fn(&ExperimentConfig) -> opsize::Result<Report>>,
    ) = match &cli.command {
        Command::SizeGrowth(c) => (c, Some(experiments::exp_size_growth)),
        Command::TrotterError(c) => (c, Some(experiments::exp_trotter_error)),
        Command::Noise(c) => (c, Some(experiments::exp_noise)),
        Command::Mitigate(c) => (c, Some(experiments::exp_mitigation)),
        Command::ValidateConfig(c) => (c, None),
    };
    let cfg = common.load()?;
    match runner {
        None => print!("{}", experiments::describe(&cfg)?),
        Some(f) => {
            for path in f(&cfg)?.write_all(&cfg.out)? {
                println!("{}", path.display());
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
            ExitCode::from(exit_code(&e))
        }
    }
}
