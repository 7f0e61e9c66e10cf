//! The `qsr` command-line front end.
//!
//! Every subcommand resolves its parameters in the order
//! command-line flag > `--config` JSON file > built-in default, records the
//! resolved configuration as `config.json` in the output directory and
//! stamps each artifact with that configuration's hash and the seed.
//!
//! Exit codes: 0 success, 2 usage, 3 numerical accuracy, 4 I/O.

mod commands;
pub mod options;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::error::QsrError;
use options::{Common, CompareCmd, CoolCmd, MarginalCmd, Merge, QuasiprobCmd, StateCmd, TomographyCmd};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "QSR_OUTPUT_ROOT";

#[derive(Debug, Parser)]
#[command(name = "qsr", version, about = "Quasi-probability distributions, pulsed homodyne tomography and cooling by measurement")]
pub struct Cli {
    /// Directory under which default output directories are created.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "qsr-output")]
    pub output_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a test state; writes its density matrix and a summary.
    State {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: StateCmd,
    },
    /// Tabulate 𝒫(s, α) on a grid; writes CSV, PGM and a JSON sidecar.
    Quasiprob {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: QuasiprobCmd,
    },
    /// Quadrature marginal at one angle, optionally with the probe outcome density.
    Marginal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: MarginalCmd,
    },
    /// Simulate pulsed tomography and reconstruct 𝒫(s, α).
    Tomography {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: TomographyCmd,
    },
    /// Two-pulse cooling by measurement, optionally swept over parameters.
    Cool {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: CoolCmd,
    },
    /// Compare two grid CSV files point by point.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        opts: CompareCmd,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("output directory {0} is not empty; pass --overwrite to reuse it")]
    OutputExists(PathBuf),
    #[error(transparent)]
    Lib(#[from] QsrError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::OutputExists(_) => EXIT_IO,
            CliError::Lib(e) => match e {
                QsrError::Argument(_)
                | QsrError::Parse(_)
                | QsrError::Ordering(_)
                | QsrError::InvalidState(_)
                | QsrError::GridMismatch(_) => EXIT_USAGE,
                QsrError::Truncation { .. }
                | QsrError::Resolution(_)
                | QsrError::Normalization { .. }
                | QsrError::Accuracy(_) => EXIT_NUMERICAL,
                QsrError::Io(_) | QsrError::Json(_) => EXIT_IO,
            },
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let root = cli.output_root;
    match cli.command {
        Command::State { common, opts } => {
            let opts = with_config(opts, &common)?;
            commands::state(opts, &OutputTarget::new(&common, &root, "state"))
        }
        Command::Quasiprob { common, opts } => {
            let opts = with_config(opts, &common)?;
            commands::quasiprob(opts, &OutputTarget::new(&common, &root, "quasiprob"))
        }
        Command::Marginal { common, opts } => {
            let opts = with_config(opts, &common)?;
            commands::marginal(opts, &OutputTarget::new(&common, &root, "marginal"))
        }
        Command::Tomography { common, opts } => {
            let opts = with_config(opts, &common)?;
            commands::tomography(opts, &OutputTarget::new(&common, &root, "tomography"))
        }
        Command::Cool { common, opts } => {
            let opts = with_config(opts, &common)?;
            commands::cool(opts, &OutputTarget::new(&common, &root, "cool"))
        }
        Command::Compare { common, opts } => {
            let opts = with_config(opts, &common)?;
            commands::compare(opts, &OutputTarget::new(&common, &root, "compare"))
        }
    }
}

fn with_config<T: Merge + DeserializeOwned>(flags: T, common: &Common) -> Result<T, CliError> {
    match &common.config {
        None => Ok(flags),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(QsrError::from)?;
            let file: T = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
            Ok(flags.merge(file))
        }
    }
}

/// Where a command writes. Commands call [`OutputTarget::prepare`] once
/// their options have resolved, so usage errors never touch the file system.
pub struct OutputTarget {
    dir: PathBuf,
    overwrite: bool,
}

impl OutputTarget {
    pub fn new(common: &Common, root: &Path, command: &str) -> Self {
        Self {
            dir: common.out.clone().unwrap_or_else(|| root.join(command)),
            overwrite: common.overwrite,
        }
    }

    /// Creates the directory, refusing a non-empty one unless `--overwrite`
    /// was given.
    pub fn prepare(&self) -> Result<&Path, CliError> {
        if self.dir.is_dir() && !self.overwrite {
            let mut entries = std::fs::read_dir(&self.dir).map_err(QsrError::from)?;
            if entries.next().is_some() {
                return Err(CliError::OutputExists(self.dir.clone()));
            }
        }
        std::fs::create_dir_all(&self.dir).map_err(QsrError::from)?;
        Ok(&self.dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Lib(QsrError::Accuracy("x".into())).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::Lib(QsrError::Ordering("x".into())).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::OutputExists(PathBuf::from("o")).exit_code(), EXIT_IO);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::Lib(QsrError::Io(io)).exit_code(), EXIT_IO);
    }

    #[test]
    fn non_empty_output_needs_overwrite() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("x"), "1").unwrap();
        let common = Common {
            out: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let target = OutputTarget::new(&common, Path::new("."), "state");
        assert!(matches!(target.prepare(), Err(CliError::OutputExists(_))));
        let common = Common { overwrite: true, ..common };
        assert!(OutputTarget::new(&common, Path::new("."), "state").prepare().is_ok());
    }
}
