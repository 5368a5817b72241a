use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::checks::Tolerances;
use crate::commands;
use crate::error::{exit, CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "reductionlab",
    version,
    about = "Verify measurement models and derive state reduction"
)]
struct Cli {
    /// Operator-norm tolerance for pass/fail (default 1e-9).
    #[arg(long, global = true, env = "REDUCTIONLAB_TOL")]
    tolerance: Option<f64>,
    /// Print a JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Include elapsed milliseconds in reports.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct DimRange(usize, usize);

/// `lo..hi` (inclusive), `lo..=hi`, or a single dimension.
fn parse_dims(s: &str) -> Result<DimRange, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"));
    match s.split_once("..") {
        Some((lo, hi)) => Ok(DimRange(num(lo)?, num(hi.strip_prefix('=').unwrap_or(hi))?)),
        None => num(s).map(|d| DimRange(d, d)),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the structural checks on a model file.
    Verify { model: PathBuf },
    /// Reduced state and probability for one outcome.
    Reduce {
        model: PathBuf,
        /// k, +, -, +i, -i, mixed, uniform, or @matrix.json
        #[arg(allow_hyphen_values = true)]
        state: String,
        #[arg(allow_negative_numbers = true)]
        outcome: f64,
    },
    /// Joint statistics, prior and posteriors for an entangled scenario file.
    Entangled { scenario: PathBuf },
    /// Random-model invariant sweep.
    Sweep {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        trials: usize,
        #[arg(long, default_value = "2..4", value_parser = parse_dims)]
        dims: DimRange,
    },
    /// Write every reference model to a directory as model files.
    ExportZoo {
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Rendered output and whether every check passed.
fn dispatch(cli: &Cli) -> CliResult<(String, bool)> {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Usage(format!(
                "tolerance must be positive and finite, got {t}"
            )));
        }
        tol.op = t;
    }
    let json = cli.json;
    Ok(match &cli.command {
        Command::Verify { model } => {
            let r = commands::cmd_verify(model, tol, cli.timing)?;
            (if json { to_json(&r) } else { r.human() }, r.pass)
        }
        Command::Reduce {
            model,
            state,
            outcome,
        } => {
            let (r, matrix) = commands::cmd_reduce(model, state, *outcome)?;
            (if json { to_json(&r) } else { r.human(&matrix) }, true)
        }
        Command::Entangled { scenario } => {
            let r = commands::cmd_entangled(scenario, tol, cli.timing)?;
            (if json { to_json(&r) } else { r.human() }, r.pass)
        }
        Command::Sweep { seed, trials, dims } => {
            let r = commands::cmd_sweep(*seed, *trials, [dims.0, dims.1], tol, cli.timing)?;
            (if json { to_json(&r) } else { r.human() }, r.pass)
        }
        Command::ExportZoo { dir, seed } => {
            let r = commands::cmd_export_zoo(dir, *seed)?;
            (
                if json {
                    to_json(&r)
                } else {
                    r.files.join("\n") + "\n"
                },
                true,
            )
        }
    })
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    exit::OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    exit::USAGE
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok((text, pass)) => {
            let _ = out.write_all(text.as_bytes());
            if pass {
                exit::OK
            } else {
                exit::CHECK_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
