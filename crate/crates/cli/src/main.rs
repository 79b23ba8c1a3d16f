//! `qlattice`: quasiclassical and exact dynamics of small nonlinear boson
//! and spin lattices, driven by TOML config files. Exit codes: 0 success,
//! 2 configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{CmdError, GlobalOpts, OrderingArg};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "qlattice", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingFlag {
    /// Normal ordering
    No,
    /// Symmetric ordering
    So,
    /// Run both orderings into per-ordering subdirectories
    Both,
}

#[derive(Args)]
struct CommonFlags {
    /// Output directory (overrides [output].dir; default ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Integrator relative tolerance override
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Integrator absolute tolerance override
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Operator ordering override
    #[arg(long, value_enum)]
    ordering: Option<OrderingFlag>,
    /// Seed for randomized property checks
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a lattice trajectory and emit tables plus a manifest
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Bisect the self-trapping threshold over total excitation numbers
    SweepGamma {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Compare exact Fock-space evolution against the factorized flow
    ExactCompare {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Emit final-state Q-function fields per site
    Qfunc {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Emit final-state number distributions per site
    Poisson {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Run the coherent-state geometry property checks
    Geometry {
        #[command(flatten)]
        flags: CommonFlags,
    },
}

fn load_config(path: &PathBuf) -> Result<RunConfig, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))?;
    RunConfig::parse(&text).map_err(CmdError::from)
}

fn opts(flags: &CommonFlags, cfg: Option<&RunConfig>) -> GlobalOpts {
    let out = flags
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output.as_ref().map(|o| PathBuf::from(&o.dir))))
        .unwrap_or_else(|| PathBuf::from("out"));
    GlobalOpts {
        out,
        rel_tol: flags.rel_tol,
        abs_tol: flags.abs_tol,
        ordering: flags.ordering.map(|o| match o {
            OrderingFlag::No => OrderingArg::No,
            OrderingFlag::So => OrderingArg::So,
            OrderingFlag::Both => OrderingArg::Both,
        }),
        seed: flags.seed,
    }
}

fn dispatch(cli: Cli) -> Result<(), CmdError> {
    match &cli.command {
        Command::Simulate { config, flags } => {
            let cfg = load_config(config)?;
            commands::simulate(&cfg, &opts(flags, Some(&cfg)))
        }
        Command::SweepGamma { config, flags } => {
            let cfg = load_config(config)?;
            commands::sweep_gamma(&cfg, &opts(flags, Some(&cfg)))
        }
        Command::ExactCompare { config, flags } => {
            let cfg = load_config(config)?;
            commands::exact_compare(&cfg, &opts(flags, Some(&cfg)))
        }
        Command::Qfunc { config, flags } => {
            let cfg = load_config(config)?;
            commands::qfunc(&cfg, &opts(flags, Some(&cfg)))
        }
        Command::Poisson { config, flags } => {
            let cfg = load_config(config)?;
            commands::poisson(&cfg, &opts(flags, Some(&cfg)))
        }
        Command::Geometry { flags } => commands::geometry(&opts(flags, None)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CmdError::Config(_) => ExitCode::from(2),
                CmdError::Numerical(_) => ExitCode::from(3),
            }
        }
    }
}
