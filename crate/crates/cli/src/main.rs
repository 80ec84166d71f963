use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use eivreg_cli::commands::{cmd_mc, cmd_risk, cmd_solve, cmd_spectrum, cmd_sweep};
use eivreg_cli::{Cli, CliError, Command};

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(args) => {
            let res = cmd_solve(&args)?;
            match &args.out {
                Some(path) => {
                    emit(Some(path), &res.solution_csv())?;
                    emit(None, &res.summary)
                }
                None => emit(None, &(res.solution_csv() + &res.summary)),
            }
        }
        Command::Risk(args) => emit(args.out.as_deref(), &cmd_risk(&args)?),
        Command::Mc(args) => emit(args.out.as_deref(), &cmd_mc(&args)?),
        Command::Spectrum(args) => emit(args.out.as_deref(), &cmd_spectrum(&args)?),
        Command::Sweep(args) => emit(args.out.as_deref(), &cmd_sweep(&args)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eivreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
