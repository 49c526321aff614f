//! Batch front end for steady-state transport and counting statistics.
//!
//! One JSON configuration describes the junction (sample block, lead
//! couplings, reservoirs) plus numerical policy; each subcommand runs one
//! computation and emits CSV. Exit codes: 0 on success, 1 when a computation
//! fails or a validation check does not pass, 2 on invalid input.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use landauer::fcs::FcsError;
use landauer::scattering::ScatteringError;
use landauer::timeevo::TimeEvoError;
use landauer::transport::{OnsagerMethod, TransportError};
use thiserror::Error;

mod commands;
mod config;

use commands::{KindArg, SweepField};
use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or flags; exit code 2.
    #[error("{0}")]
    Input(String),
    /// A computation refused or lost precision; exit code 1.
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<ScatteringError> for CliError {
    fn from(e: ScatteringError) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::NotTRI => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<FcsError> for CliError {
    fn from(e: FcsError) -> Self {
        match e {
            FcsError::WrongShape(_) => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<TimeEvoError> for CliError {
    fn from(e: TimeEvoError) -> Self {
        match e {
            TimeEvoError::LeadTooShort(_)
            | TimeEvoError::WrongShape(_)
            | TimeEvoError::PacketNotResolved(_) => CliError::Input(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the quadrature absolute tolerance from the configuration.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum MethodArg {
    /// Transmittance moment integrals at the reference equilibrium.
    Direct,
    /// Counting-field Hessian of the cumulant generating function.
    Fcs,
}

#[derive(Debug, Parser)]
#[command(
    name = "landauer",
    version,
    about = "Steady-state transport and full counting statistics of tight-binding junctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sweep the on-shell scattering matrix and transmittance table.
    Smatrix {
        #[command(flatten)]
        common: Common,
        /// Lowest energy of the sweep (inside the band).
        #[arg(long, default_value_t = -0.95, allow_negative_numbers = true)]
        emin: f64,
        /// Highest energy of the sweep (inside the band).
        #[arg(long, default_value_t = 0.95, allow_negative_numbers = true)]
        emax: f64,
        /// Number of energy nodes.
        #[arg(long, default_value_t = 201)]
        n: usize,
    },
    /// Steady particle/energy/heat currents, entropy production, residuals.
    Currents {
        #[command(flatten)]
        common: Common,
    },
    /// Linear-response matrix at the configured equilibrium.
    Onsager {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = MethodArg::Direct)]
        method: MethodArg,
    },
    /// Sweep the cumulant generating function along one counting field.
    Fcs {
        #[command(flatten)]
        common: Common,
        /// Lead carrying the counting field.
        #[arg(long, default_value_t = 0)]
        lead: usize,
        /// Which counting field to sweep.
        #[arg(long, value_enum, default_value_t = SweepField::Nu)]
        field: SweepField,
        /// Smallest field value.
        #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
        min: f64,
        /// Largest field value.
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        max: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 41)]
        n: usize,
    },
    /// Scan the large-deviation rate function of the particle transfer.
    Ldp {
        #[command(flatten)]
        common: Common,
        /// Smallest transfer rate (default: 0.2x the mean current).
        #[arg(long, allow_negative_numbers = true)]
        qmin: Option<f64>,
        /// Largest transfer rate (default: 1.8x the mean current).
        #[arg(long, allow_negative_numbers = true)]
        qmax: Option<f64>,
        /// Number of grid points.
        #[arg(long, default_value_t = 41)]
        n: usize,
    },
    /// Current versus time on the truncated finite system.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Lead whose current is recorded.
        #[arg(long, default_value_t = 0)]
        lead: usize,
        #[arg(long, value_enum, default_value_t = KindArg::Particle)]
        kind: KindArg,
        /// First sample time.
        #[arg(long, default_value_t = 0.0)]
        tmin: f64,
        /// Last sample time (default: 0.6 R).
        #[arg(long)]
        tmax: Option<f64>,
        /// Number of sample times.
        #[arg(long, default_value_t = 121)]
        points: usize,
    },
    /// Run the cross-module identity suite and report PASS/FAIL per check.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Smatrix {
            common,
            emin,
            emax,
            n,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::smatrix(&cfg, emin, emax, n, common.out.as_deref())
        }
        Command::Currents { common } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::currents(&cfg, common.out.as_deref())
        }
        Command::Onsager { common, method } => {
            let cfg = RunConfig::load(&common.config)?;
            let method = match method {
                MethodArg::Direct => OnsagerMethod::Direct,
                MethodArg::Fcs => OnsagerMethod::Fcs,
            };
            commands::onsager(&cfg, method, common.out.as_deref())
        }
        Command::Fcs {
            common,
            lead,
            field,
            min,
            max,
            n,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::fcs_sweep(&cfg, common.tol, lead, field, min, max, n, common.out.as_deref())
        }
        Command::Ldp {
            common,
            qmin,
            qmax,
            n,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::ldp(&cfg, qmin, qmax, n, common.out.as_deref())
        }
        Command::Evolve {
            common,
            lead,
            kind,
            tmin,
            tmax,
            points,
        } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::evolve(&cfg, lead, kind, tmin, tmax, points, common.out.as_deref())
        }
        Command::Validate { common } => {
            let cfg = RunConfig::load(&common.config)?;
            commands::validate(&cfg, common.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
