//! Command-line front end: `deficiency`, `monotonicity`, `discriminate` and
//! `selftest` subcommands, report emission and exit codes.

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub mod commands;
pub mod error;
pub mod report;
pub mod suite;

pub use error::{exit, CliError, CliResult};

/// Environment variable naming the default directory for reports.
pub const OUT_DIR_ENV: &str = "DEFICIENCY_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "deficiency",
    version,
    about = "Geometric deficiency of coherence and entanglement"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deficiency of a state read from a JSON state file.
    Deficiency(DeficiencyArgs),
    /// Seeded search for selective-measurement monotonicity violations.
    Monotonicity(MonotonicityArgs),
    /// Subchannel discrimination games for a state and a maximal resource state.
    Discriminate(DiscriminateArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ResourceKind {
    Coherence,
    Entanglement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodChoice {
    /// Closed form or pure-state formula when it applies, optimizer otherwise.
    Auto,
    /// Coordinate ascent over phases (coherence).
    Ascent,
    /// Projected power iteration over local unitaries (entanglement).
    PowerIteration,
    /// Exhaustive phase grid (coherence, d <= 4).
    Oracle,
}

#[derive(Debug, Args)]
pub struct DeficiencyArgs {
    #[arg(long, value_enum)]
    pub resource: ResourceKind,
    /// State file: {"dims": [..], "re": [[..]], "im": [[..]]}.
    #[arg(long)]
    pub state: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
    pub method: MethodChoice,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points per angle for `--method oracle`.
    #[arg(long, default_value_t = 64)]
    pub grid_points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Purity {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorChoice {
    PermPhaseMixture,
    BasisMeasurement,
    Composed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct MonotonicityArgs {
    #[arg(long, value_enum)]
    pub resource: ResourceKind,
    /// `d` for coherence, `dA,dB` for entanglement.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Purity::Mixed)]
    pub purity: Purity,
    /// Rank of mixed states (full rank by default).
    #[arg(long)]
    pub rank: Option<usize>,
    /// Incoherent channel family (coherence only).
    #[arg(long, value_enum, default_value_t = FlavorChoice::Composed)]
    pub flavor: FlavorChoice,
    /// Largest number of Kraus operators per local factor (entanglement only).
    #[arg(long, default_value_t = 3)]
    pub max_local_kraus: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = deficiency_core::freeops::DEFAULT_VIOLATION_TOL)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    #[arg(long)]
    pub state: PathBuf,
    /// Maximal resource state to build games for.
    #[arg(
        long,
        conflicts_with = "optimize",
        required_unless_present = "optimize"
    )]
    pub sigma: Option<PathBuf>,
    /// Use the deficiency optimizer's witness for this resource as sigma.
    #[arg(long, value_enum)]
    pub optimize: Option<ResourceKind>,
    /// Resource that `--sigma` must be maximal for (inferred from its dims when omitted).
    #[arg(long, value_enum, conflicts_with = "optimize")]
    pub resource: Option<ResourceKind>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, value_enum, default_value_t = suite::SuiteKind::Quick)]
    pub suite: suite::SuiteKind,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Where to write the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs one parsed command and returns its exit code.
pub fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Deficiency(a) => commands::deficiency(&a),
        Command::Monotonicity(a) => commands::monotonicity(&a),
        Command::Discriminate(a) => commands::discriminate(&a),
        Command::Selftest(a) => commands::selftest(&a),
    }
}

/// Parses `args` and runs the command, printing errors to stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::PARSE
            } else {
                exit::OK
            });
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
