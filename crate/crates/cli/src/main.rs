//! `lamedn`: forward solves, derivative and identity checks, kernels,
//! stability probes, reconstruction and unique continuation experiments.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Run};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "lamedn", version, about = "Lamé parameter identification from a local DN map")]
struct Cli {
    /// JSON run configuration; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Discrete DN matrix as JSON.
    Forward,
    /// Alessandrini identity over random pairs.
    IdentityCheck,
    /// Fréchet derivative against finite differences.
    DerivativeCheck,
    /// Biphase kernel table and on-axis derivative check.
    Kernels,
    /// Lower bound `q0` of the derivative.
    Q0,
    /// Empirical Lipschitz stability constant.
    Probe,
    /// Gauss-Newton reconstruction from synthetic data.
    Reconstruct,
    /// Three-sphere, Caccioppoli and cone experiments.
    Ucp,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::read(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", cli.out.display())))?;
    let mut r = Run::new(cfg, cli.out.clone());
    match cli.command {
        Command::Forward => commands::cmd_forward(&mut r)?,
        Command::IdentityCheck => commands::cmd_identity_check(&mut r)?,
        Command::DerivativeCheck => commands::cmd_derivative_check(&mut r)?,
        Command::Kernels => commands::cmd_kernels(&mut r)?,
        Command::Q0 => commands::cmd_q0(&mut r)?,
        Command::Probe => commands::cmd_probe(&mut r)?,
        Command::Reconstruct => commands::cmd_reconstruct(&mut r)?,
        Command::Ucp => commands::cmd_ucp(&mut r)?,
    }
    r.finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(names)) => {
            for n in names {
                eprintln!("check failed: {n}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("numeric failure: {m}");
            ExitCode::from(3)
        }
    }
}
