//! Command-line front end: `qds run <file>`, `qds validate <file>`, `qds list-presets`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical-contract
//! violation. Every failure also prints one JSON error object on stderr.

mod scenario;
mod tasks;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

pub use scenario::{
    build_spectral, preset_listing, DaviesQubit, Drive, Format, GridSpec, MethodName, Model, ObservableSpec, OutputSpec,
    ParamDoc, PresetInfo, PresetRef, Scenario, StateSpec, Task, TaskOptions, PRESETS,
};
pub use tasks::{prepare, Observable, Outcome, Prepared};

use crate::error::Error;

/// Environment variable overriding the output directory (below `--out`).
pub const OUT_DIR_ENV: &str = "QDS_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Io,
    Parse,
    Schema,
    UnknownPreset,
    Validation,
    Contract,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Io => "io",
            ErrorKind::Parse => "parse",
            ErrorKind::Schema => "schema",
            ErrorKind::UnknownPreset => "unknown-preset",
            ErrorKind::Validation => "validation",
            ErrorKind::Contract => "contract",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Io => 1,
            ErrorKind::Parse | ErrorKind::Schema | ErrorKind::UnknownPreset | ErrorKind::Validation => 2,
            ErrorKind::Contract => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// Extra machine-readable fields merged into the error object.
    pub details: serde_json::Map<String, Value>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), details: Default::default() }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), self.kind.name().into());
        obj.insert("exit_code".into(), self.kind.exit_code().into());
        obj.insert("message".into(), self.message.clone().into());
        obj.extend(self.details.clone());
        json!({ "error": obj })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::NotCompletelyPositive { min_eigenvalue } => {
                CliError::new(ErrorKind::Contract, message).with("min_eigenvalue", min_eigenvalue)
            }
            Error::NotPositive { min_eigenvalue, .. } => {
                CliError::new(ErrorKind::Contract, message).with("min_eigenvalue", min_eigenvalue)
            }
            Error::Numerical(_) => CliError::new(ErrorKind::Contract, message),
            _ => CliError::new(ErrorKind::Validation, message),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qds", version, about = "Quantum dynamical semigroup scenarios")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides QDS_OUT_DIR.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed; overrides the scenario file.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario file and write its artifact.
    Run { file: PathBuf },
    /// Print model and spectral presets with their parameters.
    ListPresets,
    /// Check a scenario file without running it.
    Validate { file: PathBuf },
}

/// Settings that do not come from the scenario file.
#[derive(Clone, Debug, Default)]
pub struct RunSettings {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(ErrorKind::Io, format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| CliError::new(ErrorKind::Parse, format!("invalid JSON: {e}")).with("line", e.line()))?;
    serde_json::from_value(value).map_err(|e| CliError::new(ErrorKind::Schema, e.to_string()))
}

/// Run a scenario and write its artifact; returns the artifact path.
///
/// A contract violation still writes the report before returning the error.
pub fn run_scenario(scenario: &Scenario, settings: &RunSettings) -> Result<(PathBuf, Outcome), CliError> {
    let prepared = prepare(scenario, settings)?;
    let outcome = prepared.execute()?;
    let path = prepared.output_path.clone();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::new(ErrorKind::Io, format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(&path, &outcome.body)
        .map_err(|e| CliError::new(ErrorKind::Io, format!("cannot write {}: {e}", path.display())))?;
    match &outcome.violation {
        Some(v) => Err(v.clone().with("artifact", path.display().to_string())),
        None => Ok((path, outcome)),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(stdout, "{e}");
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let err = CliError::new(ErrorKind::Parse, e.to_string().trim_end().to_string());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.kind.exit_code();
        }
    };
    let settings = RunSettings {
        out_dir: args.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)),
        seed: args.seed,
    };
    let result = match &args.command {
        Command::ListPresets => {
            let _ = write!(stdout, "{}", preset_listing());
            Ok(())
        }
        Command::Validate { file } => load_scenario(file).and_then(|s| prepare(&s, &settings)).map(|p| {
            if !args.quiet {
                let _ = writeln!(stdout, "ok: {} -> {}", p.task.name(), p.output_path.display());
            }
        }),
        Command::Run { file } => load_scenario(file).and_then(|s| run_scenario(&s, &settings)).map(|(path, outcome)| {
            if !args.quiet {
                let _ = writeln!(stdout, "{}", outcome.summary);
                let _ = writeln!(stdout, "wrote {}", path.display());
            }
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.kind.exit_code()
        }
    }
}

/// Process entry point.
pub fn main() -> i32 {
    run_cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr())
}
