//! Command-line front end.
//!
//! Exit codes: 0 on success (condition verdicts are reported, never turned
//! into failures), 1 for usage and configuration errors, 2 for numerical
//! failures. Every command writes `record.json` into its output directory.

mod commands;
pub mod config;
pub mod output;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

pub use commands::{run_check, run_lyapunov, run_orbit, run_simulate};
pub use config::{ConfigError, Overrides, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const RECORD_FILE: &str = "record.json";

#[derive(Debug, Parser)]
#[command(name = "perilotka", version, about = "Periodic two-prey/one-predator model: simulation, orbits and condition checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// JSON scenario file; layered on top of --preset when both are given.
    #[arg(long, value_name = "FILE", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in scenario.
    #[arg(long, value_parser = ["fig1", "fig2"])]
    pub preset: Option<String>,
    /// Override the initial state.
    #[arg(long, value_name = "X1,X2,X3", allow_hyphen_values = true)]
    pub initial: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the full system and write the trajectory.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// End time; defaults to the configured horizon.
        #[arg(long, value_name = "T")]
        t_end: Option<f64>,
    },
    /// Evaluate the existence, coexistence and stability conditions.
    Check {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Locate a periodic orbit by shooting on the period map.
    Orbit {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "full", value_parser = ["full", "boundary", "logistic-1", "logistic-2"])]
        mode: String,
        /// Initial guess in the active coordinates of the mode.
        #[arg(long, value_name = "X,...", allow_hyphen_values = true)]
        guess: Option<String>,
        /// Acceptance threshold on the period-map residual.
        #[arg(long, value_name = "TOL")]
        tol: Option<f64>,
    },
    /// Track the Lyapunov function against the predator-free orbit.
    Lyapunov {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_name = "T")]
        t_end: Option<f64>,
    },
}

/// Summary written to `record.json` by every command.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub command: String,
    /// `ok` or `failed`.
    pub status: String,
    pub error: Option<String>,
    pub config: Value,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub scalars: BTreeMap<String, f64>,
    pub reports: BTreeMap<String, Value>,
    pub wall_time_seconds: f64,
}

impl RunRecord {
    pub fn new(command: &str, config: &ScenarioConfig) -> Self {
        Self {
            command: command.into(),
            status: "ok".into(),
            error: None,
            config: config.document.clone(),
            outputs: Vec::new(),
            scalars: BTreeMap::new(),
            reports: BTreeMap::new(),
            wall_time_seconds: 0.0,
        }
    }

    pub fn scalar(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.into(), value);
    }

    pub fn report<T: Serialize>(&mut self, name: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}")));
        self.reports.insert(name.into(), v);
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.status = "failed".into();
        self.error = Some(message.into());
    }
}

/// Failure of a command after configuration succeeded.
#[derive(Debug)]
pub enum CommandError {
    Config(ConfigError),
    Io(String),
    /// Numerical failure; the record (already written) describes what was
    /// obtained.
    Numerical(String),
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::Config(e) => write!(f, "configuration error: {e}"),
            CommandError::Io(e) => write!(f, "i/o error: {e}"),
            CommandError::Numerical(e) => write!(f, "numerical failure: {e}"),
        }
    }
}

impl From<ConfigError> for CommandError {
    fn from(e: ConfigError) -> Self {
        CommandError::Config(e)
    }
}

pub(crate) fn parse_list(s: &str, path: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError::new(path, format!("`{p}` is not a number")))
        })
        .collect()
}

fn load(args: &ScenarioArgs, horizon: Option<f64>) -> Result<ScenarioConfig, ConfigError> {
    let initial = match &args.initial {
        None => None,
        Some(s) => {
            let v = parse_list(s, "--initial")?;
            let arr: [f64; 3] = v
                .try_into()
                .map_err(|v: Vec<f64>| ConfigError::new("--initial", format!("expected 3 values, got {}", v.len())))?;
            Some(arr)
        }
    };
    ScenarioConfig::load(args.preset.as_deref(), args.config.as_deref(), &Overrides { initial, horizon })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Simulate { scenario, t_end } => {
            load(scenario, *t_end).map_err(CommandError::from).and_then(|c| run_simulate(&c, &scenario.out))
        }
        Command::Check { scenario } => load(scenario, None).map_err(CommandError::from).and_then(|c| run_check(&c, &scenario.out)),
        Command::Orbit { scenario, mode, guess, tol } => load(scenario, None)
            .map_err(CommandError::from)
            .and_then(|c| run_orbit(&c, mode, guess.as_deref(), *tol, &scenario.out)),
        Command::Lyapunov { scenario, t_end } => {
            load(scenario, *t_end).map_err(CommandError::from).and_then(|c| run_lyapunov(&c, &scenario.out))
        }
    };
    match result {
        Ok(_) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CommandError::Config(_) | CommandError::Io(_) => EXIT_CONFIG,
                CommandError::Numerical(_) => EXIT_NUMERICAL,
            }
        }
    }
}

pub(crate) fn write_file(dir: &Path, name: &str, contents: &str, record: &mut RunRecord) -> Result<(), CommandError> {
    std::fs::create_dir_all(dir).map_err(|e| CommandError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CommandError::Io(format!("cannot write {}: {e}", path.display())))?;
    record.outputs.push(name.into());
    Ok(())
}

pub(crate) fn write_record(dir: &Path, record: &mut RunRecord, started: std::time::Instant) -> Result<(), CommandError> {
    record.wall_time_seconds = started.elapsed().as_secs_f64();
    record.outputs.push(RECORD_FILE.into());
    let text = serde_json::to_string_pretty(record).expect("records serialize");
    std::fs::create_dir_all(dir).map_err(|e| CommandError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(RECORD_FILE);
    std::fs::write(&path, text + "\n").map_err(|e| CommandError::Io(format!("cannot write {}: {e}", path.display())))
}
