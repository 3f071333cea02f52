//! Command-line surface of the vacpol toolkit.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 selftest failure.

pub mod args;
pub mod commands;
pub mod grid;
pub mod validation;

use clap::Parser;

pub use commands::Failure;

/// Apply `VACPOL_THREADS` to the global thread pool.
pub fn configure_threads(value: Option<&str>) -> Result<(), Failure> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n >= 1)
        .ok_or_else(|| Failure::usage(format!("VACPOL_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(format!("cannot size the thread pool: {e}")))
}

/// Parse arguments and run one command; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Err(f) = configure_threads(std::env::var("VACPOL_THREADS").ok().as_deref()) {
        eprintln!("error: {}", f.message);
        return f.code;
    }
    let outcome = match &cli.command {
        args::Command::KernelTable(a) => commands::kernel_table(a),
        args::Command::Response(a) => commands::response(a),
        args::Command::Renormalize(a) => commands::renormalize(a),
        args::Command::Bounds(a) => commands::bounds(a),
        args::Command::Selftest(a) => commands::selftest(a),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
