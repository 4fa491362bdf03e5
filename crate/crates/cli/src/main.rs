mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Exit;

/// 2 for bad input, 3 for infeasible or undefined, 4 for resource limits.
fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Exit>() {
        return e.code as u8;
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    match err.downcast_ref::<fairscore::Error>() {
        Some(fairscore::Error::UndefinedMetric { .. } | fairscore::Error::InfeasibleSideConstraints(_) | fairscore::Error::UndefinedBound(_)) => 3,
        Some(fairscore::Error::EnumerationCap { .. }) => 4,
        Some(fairscore::Error::MalformedModel(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIRSCORE_LOG", "warn")).init();
    let cli = Cli::parse();
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Train(a) => commands::train(a, config),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Bounds(a) => commands::bounds(a, config),
        Command::Export(a) => commands::export(a, config),
        Command::Scorecard(a) => commands::scorecard(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
