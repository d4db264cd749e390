//! `grcalc`: run one verification recipe from a TOML config.
//!
//! Exit codes: 0 when every asserted check is within tolerance, 1 on a
//! numerical failure, 2 on a config error.

mod config;
mod recipes;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::Parser;

use config::{Overrides, Setup};

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

#[derive(Debug, Parser)]
#[command(name = "grcalc", version, about = "Check tensor-density identities on curved spacetimes")]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the JSON-lines report; without it the report goes to
    /// stdout and the summary to stderr.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the assertion tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Override the lattice point count on every axis.
    #[arg(long)]
    resolution: Option<usize>,
    /// Use finite differences of this order instead of analytic derivatives.
    #[arg(long, value_parser = PossibleValuesParser::new(["2", "4"]).map(|s| s.parse::<usize>().unwrap()))]
    order: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &Args) -> Result<u8, Failure> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::Config(format!("{}: {e}", args.config.display())))?;
    let overrides = Overrides {
        output: args.output.clone(),
        tolerance: args.tolerance,
        resolution: args.resolution,
        order: args.order,
    };
    let setup = Setup::load(&text, &overrides)?;
    let report = recipes::run(&setup)?;
    match &setup.config.output {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
            let path = dir.join(format!("{}.jsonl", setup.config.recipe.name()));
            std::fs::write(&path, report.jsonl()).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            print!("{}", report.summary());
            println!("report written to {}", path.display());
        }
        None => {
            print!("{}", report.jsonl());
            eprint!("{}", report.summary());
        }
    }
    Ok(if report.failed() == 0 { 0 } else { 1 })
}
