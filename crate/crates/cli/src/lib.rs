//! Command-line front end for `km-core`.
//!
//! Every run is a [`RunConfig`]: a subcommand path plus a flat parameter map
//! assembled from defaults, an optional `key = value` file and flags. [`run`]
//! turns it into output text; the binary writes that text and a JSON manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use km_core::par::Execution;
use km_core::Error;
use serde::Serialize;

mod commands;
pub mod config;

pub use config::{command, SPECS};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, config or preconditions (exit code 1).
    Validation(String),
    /// A solver or check failed (exit code 2).
    Numerical(String),
    /// Reading or writing files (exit code 3).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain { .. }
            | Error::InvalidInput(_)
            | Error::EmptyFiber { .. }
            | Error::MalformedComplex(_)
            | Error::SizeCap(_) => CliError::Validation(e.to_string()),
            Error::CollisionApproach { .. }
            | Error::Integrator { .. }
            | Error::NoConvergence { .. }
            | Error::NonTransversal { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunConfig {
    pub command: Vec<String>,
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    /// From command-line arguments (the first one is the program name).
    pub fn from_args<I, T>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = T>,
        T: Into<std::ffi::OsString> + Clone,
    {
        let matches = command()
            .try_get_matches_from(args)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        Self::from_matches(&matches)
    }

    pub fn from_matches(matches: &clap::ArgMatches) -> Result<Self, CliError> {
        let mut path = Vec::new();
        let mut m = matches;
        while let Some((name, sub)) = m.subcommand() {
            path.push(name.to_string());
            m = sub;
        }
        let spec = config::find_spec(&path).expect("parsed subcommands are in the table");
        let file = match m.get_one::<String>("config") {
            Some(p) => config::read_config_file(p.as_ref())?,
            None => BTreeMap::new(),
        };
        let params = config::merge(spec, &file, m)?;
        Ok(RunConfig { command: path, params })
    }

    pub fn command_name(&self) -> String {
        self.command.join(" ")
    }

    pub fn format(&self) -> &str {
        self.params.get("format").map_or("json", String::as_str)
    }

    pub fn out_path(&self) -> Option<PathBuf> {
        self.params.get("out").filter(|s| !s.is_empty()).map(PathBuf::from)
    }
}

/// Text produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Goes to `--out` or stdout.
    pub primary: String,
    /// Extra files requested by flags such as `--traj-out`.
    pub files: Vec<(PathBuf, String)>,
    /// Check commands record their verdict; a failed check exits with code 2.
    pub pass: Option<bool>,
}

/// Dispatches to the library. Writes nothing; see [`write_outputs`].
pub fn run(config: &RunConfig, exec: Execution) -> Result<RunOutput, CliError> {
    commands::dispatch(config, exec)
}

/// Writes the primary output (to `--out` or stdout) and extra files; returns the paths written.
pub fn write_outputs(config: &RunConfig, out: &RunOutput) -> Result<Vec<String>, CliError> {
    let mut written = Vec::new();
    let write = |path: &PathBuf, text: &str| {
        std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    };
    match config.out_path() {
        Some(p) => {
            write(&p, &out.primary)?;
            written.push(p.display().to_string());
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.primary.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            written.push("stdout".into());
        }
    }
    for (p, text) in &out.files {
        write(p, text)?;
        written.push(p.display().to_string());
    }
    Ok(written)
}

/// Machine-readable record of one run, printed to stderr.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: &'a BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<&'a str>,
    pub threads: usize,
    pub outputs: Vec<String>,
    pub status: String,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

impl<'a> Manifest<'a> {
    pub fn new(config: &'a RunConfig, threads: usize) -> Self {
        Manifest {
            tool: "km",
            version: env!("CARGO_PKG_VERSION"),
            command: config.command_name(),
            params: &config.params,
            seed: config.params.get("seed").map(String::as_str),
            threads,
            outputs: Vec::new(),
            status: "ok".into(),
            exit_code: 0,
            wall_time_s: 0.0,
        }
    }
}
