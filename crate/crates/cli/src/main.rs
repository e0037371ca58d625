//! `rqss`: invariant sweeps, fidelities, decoder calibration and figure data for
//! secret sharing with accelerated cavities.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 tolerance breach.

mod commands;
mod manifest;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rqss_core::protocol::{Figure, Scenario, UGrid};

#[derive(Debug, Parser)]
#[command(
    name = "rqss",
    version,
    about = "Relativistic quantum secret sharing simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Protocol config (.json or .toml); built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the acceleration parameter h = aL.
    #[arg(long)]
    pub h: Option<f64>,
    /// Override the number of cavity modes kept.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Tolerance of the command's pass/fail check.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Sweep {
    U,
    S,
    R,
    K,
    Q0,
    P0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FormulaChoice {
    /// Reference closed forms.
    Printed,
    /// Players 1 and 2 with the roles of u and 2u exchanged.
    Derived,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Residuals of the Bogoliubov identities per mode and perturbative order.
    BogoCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Channel invariants (T2, nbar, r) over a grid of u.
    Invariants {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0:0.984375:0.015625")]
        grid: UGrid,
        /// Cavity modes to tabulate.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        modes: Vec<usize>,
    },
    /// Closed-form and simulated fidelities side by side.
    Fidelity {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "23")]
        scenario: Scenario,
        /// Parameter swept over the grid.
        #[arg(long, value_enum, default_value = "u")]
        sweep: Sweep,
        /// Sweep values; the config value alone when omitted.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<UGrid>,
        #[arg(long, value_enum, default_value = "printed")]
        formula: FormulaChoice,
    },
    /// Fix the players-2-and-3 decoder for one or more two-mode squeezings.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Grid of s values; the config value alone when omitted.
        #[arg(long)]
        grid: Option<UGrid>,
    },
    /// CSV series behind the T2, nbar, F2_sq and F2_23 plots.
    FigureData {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "0:1:0.015625")]
        grid: UGrid,
        /// One of T2, nbar, F2_sq, F2_23; all when omitted.
        #[arg(long)]
        figure: Option<Figure>,
    },
}

/// A scientific check failed after outputs were written.
#[derive(Debug)]
pub struct Breach(pub String);

impl fmt::Display for Breach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tolerance breach: {}", self.0)
    }
}

impl std::error::Error for Breach {}

fn exit_code(err: &anyhow::Error) -> u8 {
    use rqss_core::Error as E;
    for cause in err.chain() {
        if cause.is::<Breach>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::FitResidual { .. }
                | E::TruncationTail { .. }
                | E::Calibration { .. }
                | E::QuadratureNotConverged { .. }
                | E::CorruptCache { .. }
                | E::Inconsistent(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::BogoCheck { common } => commands::bogo_check(&common),
        Command::Invariants {
            common,
            grid,
            modes,
        } => commands::invariants(&common, &grid, &modes),
        Command::Fidelity {
            common,
            scenario,
            sweep,
            grid,
            formula,
        } => commands::fidelity(&common, scenario, sweep, grid.as_ref(), formula),
        Command::Calibrate { common, grid } => commands::calibrate(&common, grid.as_ref()),
        Command::FigureData {
            common,
            grid,
            figure,
        } => commands::figure(&common, &grid, figure),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
