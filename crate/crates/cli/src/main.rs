mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use s2r_gauss::Error;

use args::{Cli, Command};
use commands::Outcome;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate { family, out_dir } => commands::generate(family, out_dir),
        Command::Verify {
            input,
            convergence,
            tol,
            out_dir,
        } => commands::verify(input, *convergence, *tol, out_dir),
        Command::Reconstruct {
            input,
            r0,
            base,
            out_dir,
        } => commands::reconstruct(input, *r0, *base, out_dir),
        Command::Report {
            verify,
            fields,
            out_dir,
        } => commands::report(verify.as_deref(), fields.as_deref(), out_dir),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ToleranceFailure) => ExitCode::from(1),
        Ok(Outcome::DegenerateInput) => ExitCode::from(4),
        Err(e) => {
            eprintln!("s2r: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 tolerance, 2 configuration or I/O, 3 malformed input, 4 degenerate input.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Accuracy { .. } | Error::Integrability { .. } | Error::InconsistentGaussMap(_) => 1,
        Error::Parse(_) | Error::Shape(_) => 3,
        Error::ConstantGaussMap(_)
        | Error::SingularGaussMap { .. }
        | Error::Degenerate { .. }
        | Error::DegenerateQuadratic { .. }
        | Error::SingularDenominator { .. }
        | Error::Assembly { .. }
        | Error::ClassificationConflict(_)
        | Error::InsufficientData(_) => 4,
        Error::Domain(_)
        | Error::ChartTooSmall { .. }
        | Error::InvalidChart(_)
        | Error::Integration { .. }
        | Error::Config(_)
        | Error::Io(_) => 2,
    }
}
