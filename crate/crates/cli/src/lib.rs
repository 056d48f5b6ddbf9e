//! Command-line front end: simulation, conditional simulation, benchmarks and validation.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod models;
pub mod validate;

use clap::Parser;

pub use error::CliError;

use args::{Cli, Command};

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => {
            let m = commands::cmd_simulate(&a)?;
            println!("wrote {} replicate(s) to {} (seed {})", m.replicates, a.output.out.display(), m.seed);
        }
        Command::Condition(a) => {
            let m = commands::cmd_condition(&a)?;
            println!("{} mode: n = {}, m = {}, simulated {} point(s) into {}", m.mode, m.n, m.m, m.simulated, a.output.out.display());
        }
        Command::Bench(a) => {
            commands::cmd_bench(&a)?;
        }
        Command::Validate(a) => {
            let checks = validate::run_suites(a.suite, a.seed)?;
            for c in &checks {
                println!("{}", c.line());
            }
            if let Some(path) = &a.report {
                io::write_json(path, &checks)?;
            }
            let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}/{}", c.suite, c.name)).collect();
            if !failed.is_empty() {
                return Err(CliError::ValidationFailed(failed));
            }
        }
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run(argv: Vec<String>) -> i32 {
    let argv = match args::expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::NonExistent { report: Some(r), .. } = &e {
                eprintln!("existence report: {}", serde_json::to_string(r).unwrap_or_default());
            }
            e.exit_code()
        }
    }
}
