//! Command-line front end for `plvar`: CSV and JSON formats plus the
//! `learn`, `simulate` and `evaluate` commands.

pub mod commands;
pub mod data;
pub mod error;
pub mod model_file;

pub use error::{CliError, CliResult};

use plvar::Execution;

/// Caps the worker count. One thread means sequential execution.
pub fn configure_threads(threads: Option<usize>) -> CliResult<Execution> {
    match threads {
        Some(0) => Err(CliError::Input("--threads must be at least 1".into())),
        Some(1) => Ok(Execution::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            // fails only if a global pool already exists, in which case it is kept
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            Ok(Execution::Parallel)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Execution::Sequential),
        None => Ok(Execution::default()),
    }
}
