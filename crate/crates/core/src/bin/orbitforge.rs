use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use orbitforge::cli::{main_with, Overrides, RunOptions, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Audit the potential (zero set, coercivity, nondegeneracy, symmetry).
    Verify,
    /// Minimizing heteroclinic between the configured pair of wells.
    Minimize,
    /// Matrix of minimal energies and triangle-inequality margins.
    Pairs,
    /// Multistart minimizers, clustering and the gap between clusters.
    Gap,
    /// Mountain-pass saddle: relax, refine, classify.
    Mp,
    /// Mountain pass restricted to reflection-equivariant curves.
    MpSym,
    /// Residuals, tails and splitting of an orbit CSV.
    Diagnose,
}

#[derive(Debug, Parser)]
#[command(name = "orbitforge", version, about = "Connecting orbits of q'' = grad V(q) for multi-well potentials")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Cap on worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (overrides `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit timings and filesystem locations from the report.
    #[arg(long)]
    normalized_report: bool,
    #[arg(long)]
    rng_seed: Option<u64>,
    #[arg(long)]
    n_seeds: Option<usize>,
    /// Orbit CSV for `diagnose`.
    #[arg(long)]
    orbit: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = match args.command {
        Command::Verify => Subcommand::Verify,
        Command::Minimize => Subcommand::Minimize,
        Command::Pairs => Subcommand::Pairs,
        Command::Gap => Subcommand::Gap,
        Command::Mp => Subcommand::Mp,
        Command::MpSym => Subcommand::MpSym,
        Command::Diagnose => Subcommand::Diagnose,
    };
    let opts = RunOptions {
        workers: args.workers,
        normalized: args.normalized_report,
        overrides: Overrides {
            out: args.out,
            rng_seed: args.rng_seed,
            n_seeds: args.n_seeds,
            orbit: args.orbit,
        },
    };
    ExitCode::from(main_with(cmd, &args.config, &opts) as u8)
}
