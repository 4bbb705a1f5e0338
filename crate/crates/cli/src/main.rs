//! `matsl` command-line front end.
//!
//! Exit codes: 0 ok, 1 internal error, 2 I/O, 3 not an accelerant, 4 usage or input
//! validation, 5 a condition check failed, 6 a condition check was inconclusive.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{FileConfig, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] matsl::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use matsl::Error as E;
        match self {
            CliError::Io(_) => 2,
            CliError::Usage(_) => 4,
            CliError::Lib(e) => match e {
                E::Io { .. } => 2,
                E::NotAnAccelerant { .. } => 3,
                E::InvalidGrid { .. }
                | E::Shape(_)
                | E::Parse { .. }
                | E::Field { .. }
                | E::Validation(_)
                | E::Config(_)
                | E::Precondition(_) => 4,
                E::PoleProximity { .. } | E::Contour { .. } | E::Extraction { .. } | E::Consistency(_) => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "matsl",
    version,
    about = "Direct and inverse spectral problems for matrix Sturm-Liouville operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Number of grid subintervals on [0, 1].
    #[arg(long)]
    grid_m: Option<usize>,
    /// Truncation level N (bins Δ_1..Δ_N, λ_max = π(N + 1/2)).
    #[arg(long)]
    n_bins: Option<usize>,
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// TOML file with defaults for the flags above and a [tolerances] table.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for the numerical kernels (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value = "warn")]
    log_level: log::LevelFilter,
    /// Step of the real-axis eigenvalue scan.
    #[arg(long)]
    scan_step: Option<f64>,
    /// Cross-check each bin with an argument-principle count.
    #[arg(long)]
    verify_bins: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Spectral data (λ_j, α_j) of a potential τ.
    Direct {
        /// Grid-function JSON file holding τ.
        #[arg(long)]
        tau: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct τ and the primitive σ of q from spectral data.
    Inverse {
        #[arg(long)]
        data: PathBuf,
        /// Also solve on the refined grid and extrapolate.
        #[arg(long)]
        richardson: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Check the conditions characterizing spectral data.
    Validate {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// τ → spectral data → τ̂ with error report and convergence table.
    Roundtrip {
        #[arg(long)]
        tau: PathBuf,
        #[arg(long)]
        no_richardson: bool,
        /// Skip the {N, 2N} × {m, 2m} table.
        #[arg(long)]
        no_convergence: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Write a seeded smooth Hermitian potential.
    Synth {
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.3)]
        scale: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid_m: self.grid_m,
            n_bins: self.n_bins,
            lambda_max: self.lambda_max,
            scan_step: self.scan_step,
            verify_bins: self.verify_bins.then_some(true),
            threads: self.threads,
            ..Overrides::default()
        }
    }

    fn file_config(&self) -> Result<FileConfig, CliError> {
        match &self.config {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    fn setup(&self) -> Result<(), CliError> {
        env_logger::Builder::new()
            .filter_level(self.log_level)
            .format_timestamp(None)
            .try_init()
            .ok();
        if let Some(n) = self.threads {
            if n == 0 {
                return Err(CliError::Usage("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
        }
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::Io(format!("{}: {e}", self.out.display())))
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Direct { tau, common } => {
            common.setup()?;
            commands::direct(&tau, &common.file_config()?, &common.overrides(), &common.out)
        }
        Command::Inverse {
            data,
            richardson,
            common,
        } => {
            common.setup()?;
            let mut o = common.overrides();
            o.richardson = richardson.then_some(true);
            commands::inverse(&data, &common.file_config()?, &o, &common.out)
        }
        Command::Validate { data, common } => {
            common.setup()?;
            commands::validate(&data, &common.file_config()?, &common.overrides(), &common.out)
        }
        Command::Roundtrip {
            tau,
            no_richardson,
            no_convergence,
            common,
        } => {
            common.setup()?;
            let mut o = common.overrides();
            o.richardson = no_richardson.then_some(false);
            commands::roundtrip(&tau, &common.file_config()?, &o, !no_convergence, &common.out)
        }
        Command::Synth {
            r,
            order,
            scale,
            seed,
            common,
        } => {
            common.setup()?;
            let mut o = common.overrides();
            o.seed = seed;
            commands::synth(r, order, scale, &common.file_config()?, &o, &common.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
