//! Batch front end for `cvlattice`: TOML scenarios in, CSV tables and a JSON
//! run report out.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

pub use commands::{cmd_dispersion, cmd_simulate, cmd_supermodes, cmd_sweep, RunReport, SweepRow};
pub use config::{ScenarioConfig, Solver, SCHEMA_VERSION};
pub use error::{CliError, CliResult};

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "CVLATTICE_THREADS";

/// Sizes the global worker pool. The flag wins over the environment; with
/// neither, the pool keeps its default size.
pub fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| {
                CliError::config(THREADS_ENV, format!("expected a positive integer, got `{v}`"))
            })?),
            Err(_) => None,
        },
    };
    match threads {
        Some(0) => Err(CliError::config("threads", "must be at least 1")),
        Some(n) => {
            // A pool built earlier in the same process is kept.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(())
        }
        None => Ok(()),
    }
}
