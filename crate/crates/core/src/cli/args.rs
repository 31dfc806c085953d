use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use super::UsageError;

#[derive(Debug, Parser)]
#[command(name = "ppe", version, about = "Planar curve reconstruction from the perspective velocity modulus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate U = rho^2 + rho'^2 for a depth function
    Forward(CommonArgs),
    /// Check that U is finite and non-negative
    Validate(CommonArgs),
    /// Locate and classify the critical points of U
    Critical(CommonArgs),
    /// Integrate from a regular initial condition
    Solve(CommonArgs),
    /// Taylor branches at a critical point
    Branch(CommonArgs),
    /// Enumerate global solutions through critical contacts
    Enumerate(CommonArgs),
    /// The maximal-depth solution
    Maximal(CommonArgs),
    /// Convergence cone at a maximum-type critical point
    Cone(CommonArgs),
    /// SVG overlay of the curve reconstructions
    Plot(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Forward(a)
            | Command::Validate(a)
            | Command::Critical(a)
            | Command::Solve(a)
            | Command::Branch(a)
            | Command::Enumerate(a)
            | Command::Maximal(a)
            | Command::Cone(a)
            | Command::Plot(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self, UsageError> {
        <Format as ValueEnum>::from_str(s, true).map_err(|_| UsageError(format!("unknown format {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Forward,
    Backward,
    Both,
}

impl Side {
    pub fn parse(s: &str) -> Result<Self, UsageError> {
        <Side as ValueEnum>::from_str(s, true).map_err(|_| UsageError(format!("unknown direction {s}")))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// key = value file; flags override its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Angular domain
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub domain: Option<Vec<f64>>,
    /// Closed-form U(theta)
    #[arg(long, conflicts_with = "u_csv")]
    pub u: Option<String>,
    /// Two-column theta,u grid
    #[arg(long)]
    pub u_csv: Option<PathBuf>,
    /// Closed-form depth rho(theta)
    #[arg(long)]
    pub rho: Option<String>,
    /// Initial condition
    #[arg(long, num_args = 2, value_names = ["THETA", "RHO"], allow_negative_numbers = true)]
    pub ic: Option<Vec<f64>>,
    /// Branch sign, + or -
    #[arg(long, allow_hyphen_values = true)]
    pub sign: Option<String>,
    #[arg(long, value_enum)]
    pub direction: Option<Side>,
    /// Critical point or cone apex
    #[arg(long, alias = "apex", allow_negative_numbers = true)]
    pub at: Option<f64>,
    /// Initial condition inside the cone
    #[arg(long, num_args = 2, value_names = ["THETA", "RHO"], allow_negative_numbers = true)]
    pub sample: Option<Vec<f64>>,
    #[arg(long)]
    pub tol_res: Option<f64>,
    #[arg(long)]
    pub tol_contact: Option<f64>,
    #[arg(long)]
    pub tol_bvp: Option<f64>,
    /// Taylor order N
    #[arg(long, short = 'n')]
    pub order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_switches: Option<usize>,
    #[arg(long)]
    pub fan_size: Option<usize>,
    /// Grid size for tabulated output
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output file; standard output if absent
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write one CSV per solution here
    #[arg(long)]
    pub csv_dir: Option<PathBuf>,
}
