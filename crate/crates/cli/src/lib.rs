//! Scenario files, the built-in library and report rendering for the
//! `stratsym` command.

pub mod builtin;
pub mod report;
pub mod run;
pub mod scenario;

pub use builtin::{builtin_source, list_scenarios};
pub use report::{render, Format, Record, Report};
pub use run::{run, run_with, RunOptions, DEFAULT_SEED};
pub use scenario::{load_scenario, parse_scenario, LoadError, Scenario};

use std::path::Path;

/// A file path if one exists, otherwise a built-in name.
pub fn resolve(name: &str) -> Result<Scenario, LoadError> {
    let path = Path::new(name);
    if path.is_file() {
        return load_scenario(path);
    }
    match builtin_source(name) {
        Some(src) => parse_scenario(src),
        None => Err(LoadError::Io {
            path: name.to_string(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or built-in scenario"),
        }),
    }
}
