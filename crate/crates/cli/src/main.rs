//! Command-line front end for the rabies transmission-dynamics library.
//!
//! Six subcommands wire scenario configurations to the library crate:
//!
//! * `simulate`  — integrate the model and write a trajectory CSV plus a
//!   structured-text summary (final state, infected peaks, R0),
//! * `r0`        — report the basic reproduction number in both
//!   next-generation-matrix conventions together with the matrix itself,
//! * `sensitivity` — emit the fourteen-row normalized sensitivity table,
//! * `sweep`     — evaluate R0 (and optionally simulated peaks) over a
//!   cartesian parameter grid,
//! * `fit`       — generate or load a synthetic dataset and run the
//!   nonlinear least-squares pipeline with confidence intervals,
//! * `stability` — report disease-free-equilibrium stability, and
//!   optionally locate and classify the endemic equilibrium.
//!
//! Conventions shared by every command:
//!
//! * deterministic byte-identical outputs for a fixed configuration
//!   (including the seed) — no timestamps, no machine identifiers;
//! * data go to files under the output directory; the standard output
//!   stream stays empty and diagnostics go to standard error;
//! * every artifact starts with the metadata line
//!   `# rabies-dyn <version> seed=<s> mode=<m>`;
//! * CSV artifacts are comma-separated, `.`-decimal, LF-terminated, UTF-8,
//!   with a mandatory header row, and floats carry 17 significant digits so
//!   parsing an emitted file reproduces the original values bit-for-bit;
//! * the process exits with status 0 exactly when no error occurred.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

/// Top-level argument grammar. Global flags may appear before or after the
/// subcommand name.
#[derive(Debug, Parser)]
#[command(name = "rabies-dyn", version, about = "Rabies transmission-dynamics toolkit", max_term_width = 100)]
pub struct Cli {
    /// Scenario configuration file (TOML). Unlisted keys keep defaults;
    /// unknown keys are hard errors.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory for artifacts (overrides `output_dir` from the
    /// configuration file; created if missing).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Random seed (overrides the configuration file).
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,

    /// Next-generation-matrix convention: `paper-literal` keeps the
    /// environmental column of the transmission matrix zero; `corrected`
    /// includes the linearized environmental exposure.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::PaperLiteral)]
    pub mode: ModeArg,

    /// Parameter override `NAME=VALUE` (repeatable; applied after the
    /// configuration file). Example: `--set kappa1=1.2e-4`.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE")]
    pub set: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

/// The `--mode` flag values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// Environmental column of the transmission matrix identically zero.
    PaperLiteral,
    /// Environmental exposure linearized into the transmission matrix.
    Corrected,
}

impl ModeArg {
    /// The token used on the command line and in metadata lines.
    pub fn label(self) -> &'static str {
        match self {
            ModeArg::PaperLiteral => "paper-literal",
            ModeArg::Corrected => "corrected",
        }
    }
}

/// The `--noise-mode` flag values for `fit --generate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseModeArg {
    /// Noise standard deviation scales with each compartment's peak size.
    Scaled,
    /// Noise standard deviation applies in absolute compartment units.
    Absolute,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the model over the configured time span and write the
    /// sampled trajectory plus a summary.
    Simulate,
    /// Report the basic reproduction number (both conventions), the named
    /// transmission entries, and the next-generation matrix.
    R0,
    /// Write the fourteen-row normalized sensitivity table (analytic and
    /// finite-difference indices with anticipated signs).
    Sensitivity,
    /// Evaluate R0 over a cartesian parameter grid, optionally simulating
    /// each grid point for peak and final infected sizes.
    Sweep(SweepArgs),
    /// Fit free parameters to a dataset by nonlinear least squares and
    /// report 95% confidence half-widths.
    Fit(FitArgs),
    /// Report disease-free-equilibrium stability; optionally locate and
    /// classify the endemic equilibrium.
    Stability(StabilityArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Parameter to sweep; repeat the flag for a multi-parameter grid.
    #[arg(long = "param", value_name = "NAME", required = true)]
    pub params: Vec<String>,

    /// Comma-separated values for the matching `--param` (one `--values`
    /// per `--param`, in the same order).
    #[arg(long = "values", value_name = "V1,V2,...", required = true)]
    pub values: Vec<String>,

    /// Also integrate each grid point over the configured time span and
    /// record peak and final infected sizes.
    #[arg(long)]
    pub simulate: bool,
}

#[derive(Debug, Args)]
#[command(group = ArgGroup::new("source").required(true).args(["dataset", "generate"]))]
pub struct FitArgs {
    /// Existing dataset CSV to fit (its `<stem>_meta.toml` sidecar is used
    /// when present).
    #[arg(long, value_name = "PATH")]
    pub dataset: Option<PathBuf>,

    /// Generate a synthetic dataset from the configured parameters before
    /// fitting.
    #[arg(long)]
    pub generate: bool,

    /// Comma-separated free parameter names, e.g. `tau1,kappa1,psi1`.
    #[arg(long, value_name = "NAMES", required = true)]
    pub free: String,

    /// Noise standard deviation for `--generate` (interpreted per
    /// `--noise-mode`).
    #[arg(long, value_name = "SD", default_value_t = 0.05)]
    pub noise_sd: f64,

    /// Noise model for `--generate`.
    #[arg(long, value_enum, default_value_t = NoiseModeArg::Scaled)]
    pub noise_mode: NoiseModeArg,

    /// Comma-separated observed compartment labels for `--generate`
    /// (default: the four reported panels).
    #[arg(long, value_name = "LABELS", default_value = "I_H,I_F,I_D,M")]
    pub observed: String,

    /// Initial guess for each free parameter = base value times this factor.
    #[arg(long, value_name = "FACTOR", default_value_t = 1.5)]
    pub init_factor: f64,

    /// Number of replicate fits with seeds `seed, seed+1, ...`
    /// (`--generate` only).
    #[arg(long, value_name = "N", default_value_t = 1)]
    pub replicates: usize,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    /// Also settle the system over a long horizon, polish the endemic
    /// equilibrium, and classify it locally.
    #[arg(long)]
    pub endemic: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let scenario = config::resolve(cli)?;
    match &cli.command {
        Command::Simulate => commands::simulate::run(&scenario),
        Command::R0 => commands::r0::run(&scenario),
        Command::Sensitivity => commands::sensitivity::run(&scenario),
        Command::Sweep(args) => commands::sweep::run(&scenario, args),
        Command::Fit(args) => commands::fit::run(&scenario, args),
        Command::Stability(args) => commands::stability::run(&scenario, args),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argument_grammar_is_internally_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn mode_labels_match_the_value_enum_tokens() {
        assert_eq!(ModeArg::PaperLiteral.label(), "paper-literal");
        assert_eq!(ModeArg::Corrected.label(), "corrected");
    }
}
