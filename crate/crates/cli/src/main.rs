//! Batch interface to the annular functional BVP solver.
//!
//! Subcommands: `solve`, `sweep`, `check`, `aux`, `oracle`. Exit codes:
//! 0 success, 1 usage or configuration error, 2 numerical failure.

mod commands;
mod config;
mod dump;

use commands::CommandArgs;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

const USAGE: &str = "\
usage: annulus <subcommand> [flags]

subcommands:
  solve   --config FILE [--rho R] [--out FILE]
            one solution pair: summary line on stdout, field dump to --out
            (default solution.csv)
  sweep   --config FILE [--rhos R1,R2,...] [--jobs N] [--out FILE]
            CSV of rho,lambda,iterations,fp_residual (stdout unless --out)
  check   --config FILE [--rho R] [--samples N]
            hypothesis report as key=value lines
  aux     --config FILE [--out DIR]
            dumps delta, gamma, phi and gamma_tilde fields
  oracle  --config FILE --case torsion|gamma|delta
            closed-form vs discrete comparison table

exit codes: 0 success, 1 usage/config error, 2 numerical failure";

fn parse_args(argv: &[String]) -> Result<(String, CommandArgs), CliError> {
    let mut it = argv.iter();
    let sub = it
        .next()
        .ok_or_else(|| CliError::Usage(format!("missing subcommand\n{USAGE}")))?
        .clone();
    let mut args = CommandArgs::default();
    while let Some(flag) = it.next() {
        let mut value = || {
            it.next()
                .ok_or_else(|| CliError::Usage(format!("flag {flag} needs a value")))
        };
        match flag.as_str() {
            "--config" => args.config = Some(PathBuf::from(value()?)),
            "--out" => args.out = Some(PathBuf::from(value()?)),
            "--case" => args.case = Some(value()?.clone()),
            "--rho" => {
                let v = value()?;
                args.rho =
                    Some(v.parse().map_err(|_| {
                        CliError::Usage(format!("--rho expects a number, got `{v}`"))
                    })?);
            }
            "--rhos" => {
                let v = value()?;
                let mut list = Vec::new();
                for part in v.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    list.push(part.parse().map_err(|_| {
                        CliError::Usage(format!("--rhos expects numbers, got `{part}`"))
                    })?);
                }
                if list.is_empty() {
                    return Err(CliError::Usage("--rhos list is empty".into()));
                }
                args.rhos = Some(list);
            }
            "--jobs" => {
                let v = value()?;
                args.jobs = Some(v.parse().map_err(|_| {
                    CliError::Usage(format!("--jobs expects an integer, got `{v}`"))
                })?);
            }
            "--samples" => {
                let v = value()?;
                args.samples = Some(v.parse().map_err(|_| {
                    CliError::Usage(format!("--samples expects an integer, got `{v}`"))
                })?);
            }
            other => return Err(CliError::Usage(format!("unknown flag `{other}`\n{USAGE}"))),
        }
    }
    Ok((sub, args))
}

fn run(argv: &[String]) -> Result<(), CliError> {
    let (sub, args) = parse_args(argv)?;
    match sub.as_str() {
        "solve" => commands::cmd_solve(&args),
        "sweep" => commands::cmd_sweep(&args),
        "check" => commands::cmd_check(&args),
        "aux" => commands::cmd_aux(&args),
        "oracle" => commands::cmd_oracle(&args),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::Usage(format!(
            "unknown subcommand `{other}`\n{USAGE}"
        ))),
    }
}

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if let Err(err) = run(&argv) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
