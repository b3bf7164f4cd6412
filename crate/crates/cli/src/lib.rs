//! Config parsing, subcommands and serialization behind the `kawahara`
//! binary.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{run, CliError, Command, SCHEMA_VERSION};
pub use config::{parse_config, RunConfig};

/// Environment variable capping the worker threads of the parallel
/// subcommands.
pub const THREADS_VAR: &str = "KAWAHARA_THREADS";

/// Thread count from `KAWAHARA_THREADS`; `None` when unset or empty.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Input(format!("{THREADS_VAR} must be a positive integer, got '{v}'"))),
        },
    }
}
