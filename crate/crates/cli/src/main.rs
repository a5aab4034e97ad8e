mod commands;
mod output;
mod verify;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit status for invalid inputs or parameters.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for numerical solver failures.
pub const EXIT_SOLVER: u8 = 3;
/// Exit status for verification-suite violations.
pub const EXIT_VERIFY: u8 = 1;

#[derive(Parser)]
#[command(
    name = "homog",
    about = "Cell-problem experiments for periodic elastic media with brittle inclusions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the effective tensor A0 of the voided cell problem
    CellTensor {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long, default_value_t = 64)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also dump the conjugate-gradient residual history of the e1 solve
        #[arg(long)]
        residual_csv: Option<PathBuf>,
    },
    /// Estimate the limit density over a growing cell list
    Fhom {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        xi: [f64; 2],
        #[arg(long, value_delimiter = ',', required = true)]
        t: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = homog_core::START_SEED)]
        seed: u64,
    },
    /// Compare cell energies at scaled slopes against quadratic scaling
    ProbeHomogeneity {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        xi: [f64; 2],
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = homog_core::START_SEED)]
        seed: u64,
    },
    /// Sweep the cell problem along a toughness schedule alpha(eps) = c eps^p
    Sweep {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        xi: [f64; 2],
        #[arg(long)]
        c: f64,
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        m: usize,
        /// Bad-cell threshold for the N_bad column
        #[arg(long, default_value_t = homog_core::DEFAULT_BAD_CELL_BETA)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = homog_core::START_SEED)]
        seed: u64,
    },
    /// Check the budget-constrained recovery estimate on one geometry
    Appendix {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long, value_parser = parse_pair)]
        xi: [f64; 2],
        #[arg(long, default_value_t = 1)]
        t: usize,
        #[arg(long, default_value_t = 16)]
        m: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[arg(long, default_value_t = homog_core::START_SEED)]
        seed: u64,
    },
    /// Check a fixture against its stored oracle, or regenerate it
    Oracle {
        #[arg(long, conflicts_with = "write_builtin")]
        fixture: Option<PathBuf>,
        /// Recompute the stored reference minima by exhaustive search
        #[arg(long)]
        regen_oracle: bool,
        /// Write the built-in fixture set (with fresh oracles) to a directory
        #[arg(long)]
        write_builtin: Option<PathBuf>,
    },
    /// Run the full invariant suite against a directory of fixtures
    Verify {
        #[arg(long)]
        fixtures_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated numbers, e.g. 1,0".into());
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok([a, b])
}

fn init_thread_pool() -> Result<(), String> {
    let threads = match std::env::var("HOMOG_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| format!("HOMOG_THREADS must be a non-negative integer, got {v:?}"))?,
        Err(_) => 0,
    };
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_thread_pool() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_VALIDATION);
    }
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
