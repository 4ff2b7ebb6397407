//! `stilde`: S̃ computation, reconstruction, perturbation and witness runs
//! on stabilizer models.

mod commands;
mod config;
mod fail;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::RunConfig;
use crate::fail::Fail;

#[derive(Parser)]
#[command(name = "stilde", version, about = "Topological S-matrix of stabilizer ground states")]
struct Cli {
    /// JSON run config. Omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fail with exit 2 unless the full geometric bound holds.
    #[arg(long, global = true)]
    strict_geometry: bool,
    /// Largest Hilbert dimension the dense oracle may build.
    #[arg(long, global = true)]
    oracle_cap: Option<u128>,
    /// Directory for JSON and CSV outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// S̃ on the configured annulus pair, with group and stability.
    Smatrix,
    /// Group from an S̃, and optionally whether two S̃ agree.
    Reconstruct {
        #[arg(long)]
        stilde: Option<PathBuf>,
        #[arg(long)]
        other: Option<PathBuf>,
    },
    /// S̃ before and after the configured circuit.
    Perturb,
    /// Run a witness scenario: ghz, bell-poles, toric, product-state or all.
    Witness {
        name: Option<String>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Dense cross-check of the symbolic engine.
    Oracle {
        /// torus3, patch, ghz, bell-poles or product-state instead of the config model.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Commutation, frustration and small-instance LTO of the model.
    Check,
    /// Logical algebras of both annuli.
    Algebra,
}

fn run(cli: Cli) -> Result<(), Fail> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(c) = cli.oracle_cap {
        cfg.oracle.cap = c;
    }
    cfg.strict_geometry |= cli.strict_geometry;
    cfg.validate()?;
    let ctx = Ctx { cfg, out: cli.out };
    match cli.command {
        Command::Smatrix => commands::smatrix(&ctx),
        Command::Reconstruct { stilde, other } => commands::reconstruct(&ctx, stilde.as_deref(), other.as_deref()),
        Command::Perturb => commands::perturb(&ctx),
        Command::Witness { name, n } => commands::witness(&ctx, name.as_deref(), n),
        Command::Oracle { scenario } => commands::oracle(&ctx, scenario.as_deref()),
        Command::Check => commands::check(&ctx),
        Command::Algebra => commands::algebra(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
