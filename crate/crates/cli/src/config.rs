//! Problem selection from flags and an optional TOML file.
//!
//! ```toml
//! problem = "hydrogen"
//! regularized = true
//! t0 = "0"
//! ```
//!
//! Flags given on the command line take precedence over the file.

use std::path::Path;

use multiprod::problems::{ProblemName, Split};
use serde::Deserialize;

use crate::args::ProblemArgs;
use crate::run::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    problem: Option<String>,
    split: Option<String>,
    regularized: Option<bool>,
    t0: Option<String>,
}

/// Fully resolved problem choice.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub name: ProblemName,
    pub split: Split,
    pub regularized: bool,
    /// Overrides the problem's own start time.
    pub t0: Option<String>,
}

fn read_file(path: &Path) -> Result<ProblemFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage("--config", format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::usage("--config", e.to_string()))
}

pub fn resolve(args: &ProblemArgs, t0_flag: Option<&String>) -> Result<ProblemSpec, CliError> {
    let file = match &args.config {
        Some(path) => read_file(path)?,
        None => ProblemFile::default(),
    };
    let name = match (args.problem, &file.problem) {
        (Some(p), _) => p,
        (None, Some(s)) => s.parse().map_err(|e: String| CliError::usage("--config", e))?,
        (None, None) => ProblemName::Matrix2x2,
    };
    let split = match (args.split, &file.split) {
        (Some(s), _) => s,
        (None, Some(s)) => s.parse().map_err(|e: String| CliError::usage("--config", e))?,
        (None, None) => Split::Frozen,
    };
    let regularized = args.regularized || file.regularized.unwrap_or(false);
    if regularized && name != ProblemName::Hydrogen {
        return Err(CliError::usage("--regularized", format!("only applies to hydrogen, not {name}")));
    }
    if name != ProblemName::Matrix2x2 && (args.split.is_some() || file.split.is_some()) {
        return Err(CliError::usage("--split", format!("only applies to matrix2x2, not {name}")));
    }
    let t0 = t0_flag.cloned().or(file.t0);
    Ok(ProblemSpec { name, split, regularized, t0 })
}
