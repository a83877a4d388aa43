//! Command-line front end: one subcommand per experiment, a TOML config of
//! unit-suffixed keys, and comma-delimited plot-ready output tables.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{execute, Command, Report};
pub use config::{emit_manifest, load_config, parse_config, Config};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "distill", version, about = "Two-node entanglement distillation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// Config file; omitted means all defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base seed; limited to the TOML integer range so it can be echoed
    /// into the manifest.
    #[arg(long, global = true, value_name = "SEED",
          value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Output directory (overrides run.output_dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Trials per point (overrides run.trials).
    #[arg(long, global = true, value_name = "N")]
    trials: Option<u64>,
    /// No summary on stdout; errors still go to stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Run the protocol along the configured sweep axis.
    Simulate,
    /// Distilled fidelity and ebit rate against the preparation angle.
    SweepTheta,
    /// Single-node memory lifetime and feedback oscillation.
    MemoryDecay,
    /// Ebit and heralding rates against the detection probability.
    EbitRate,
    /// Gate-error calibration from the benchmark fidelities, and event rate.
    Calibrate,
    /// Check the configuration and run the invariant suite.
    Validate,
}

impl From<&Sub> for Command {
    fn from(s: &Sub) -> Self {
        match s {
            Sub::Simulate => Command::Simulate,
            Sub::SweepTheta => Command::SweepTheta,
            Sub::MemoryDecay => Command::MemoryDecay,
            Sub::EbitRate => Command::EbitRate,
            Sub::Calibrate => Command::Calibrate,
            Sub::Validate => Command::Validate,
        }
    }
}

fn dispatch(cli: &Cli) -> Result<Report, CliError> {
    let (mut config, _) = match &cli.config {
        Some(path) => load_config(path)?,
        None => parse_config("", "<defaults>")?,
    };
    if let Some(seed) = cli.seed {
        config.run.seed = Some(seed);
    }
    if let Some(trials) = cli.trials {
        config.run.trials = Some(trials);
    }
    if let Some(out) = &cli.out {
        config.run.output_dir = Some(out.display().to_string());
    }
    let origin = cli
        .config
        .as_ref()
        .map_or("<defaults>".to_string(), |p| p.display().to_string());
    let spec = config.to_experiment().map_err(|e| CliError::Config {
        origin,
        line: None,
        key: Some(e.key),
        message: e.message,
    })?;
    execute(Command::from(&cli.command), &config, &spec, &config.output_dir())
}

/// Parses `argv`, runs the command and returns the process exit code:
/// 0 success, 2 usage or config error, 3 runtime error.
pub fn parse_and_dispatch<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            let _ = writeln!(stderr, "{err}");
            return err.exit_code();
        }
    };
    match dispatch(&cli) {
        Ok(report) => {
            if !cli.quiet {
                for line in &report.lines {
                    let _ = writeln!(stdout, "{line}");
                }
                for path in &report.written {
                    let _ = writeln!(stdout, "wrote {}", path.display());
                }
            }
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
