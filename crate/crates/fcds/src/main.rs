//! Command-line front end: graph generation, single runs, seed sweeps, and
//! full-oracle verification.
//!
//! Exit codes: 0 when every runtime invariant held (probabilistic outcomes
//! such as a non-dominating class are data, not errors), 1 when a run
//! violated an invariant, 2 for usage or input problems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fcds::harness::{
    cmd_generate, cmd_run, cmd_sweep, cmd_verify, parse_verify_level, CommandOutcome,
    ConfigOverlay, HarnessError, RunConfig,
};

#[derive(Parser)]
#[command(
    name = "fcds",
    version,
    about = "Round-accurate simulator for distributed fractional CDS packing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph (harary N K | ringclique D M | file SRC) and print its stats
    Generate {
        /// Generator name followed by its arguments
        #[arg(required = true)]
        spec: Vec<String>,
        /// Write the edge list to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the protocol on one seed and emit a JSON report
    Run(RunArgs),
    /// Run consecutive seeds in parallel and emit a CSV summary
    Sweep(RunArgs),
    /// Run one seed under the full oracle and print verdicts
    Verify(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Edge-list graph file
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Class count; defaults to ceil(vertex_connectivity / 2)
    #[arg(long)]
    t: Option<u32>,
    /// Layer multiplier; lower layers = max(1, ceil(lmul * log2 n))
    #[arg(long)]
    lmul: Option<f64>,
    /// Base RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of consecutive seeds (sweep only)
    #[arg(long)]
    seeds: Option<u64>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verification level: structural or full
    #[arg(long = "verify-level")]
    verify_level: Option<String>,
    /// Worker threads for sweeps; 0 = one per core
    #[arg(long)]
    jobs: Option<usize>,
    /// Flat key=value config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    /// Merges flags over the optional config file and applies defaults.
    fn resolve(self) -> Result<RunConfig, HarnessError> {
        let flags = ConfigOverlay {
            graph: self.graph,
            t: self.t,
            lmul: self.lmul,
            seed: self.seed,
            seeds: self.seeds,
            out: self.out,
            verify_level: self
                .verify_level
                .as_deref()
                .map(parse_verify_level)
                .transpose()?,
            jobs: self.jobs,
        };
        let base = match &self.config {
            Some(path) => ConfigOverlay::parse_file(path)?,
            None => ConfigOverlay::default(),
        };
        flags.merged_over(base).resolve()
    }
}

fn dispatch(command: Command) -> Result<(CommandOutcome, bool), HarnessError> {
    match command {
        Command::Generate { spec, out } => {
            let outcome = cmd_generate(&spec, out.as_deref())?;
            Ok((outcome, true))
        }
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let to_stdout = cfg.out.is_none();
            Ok((cmd_run(&cfg)?, to_stdout))
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let to_stdout = cfg.out.is_none();
            Ok((cmd_sweep(&cfg)?, to_stdout))
        }
        Command::Verify(args) => {
            let cfg = args.resolve()?;
            Ok((cmd_verify(&cfg)?, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok((outcome, to_stdout)) => {
            if to_stdout {
                print!("{}", outcome.text);
            }
            if outcome.sound {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
