mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use lsqgan::{Error, ErrorClass};

use args::{Cli, Command};

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numeric => 4,
    }
}

fn run(cli: Cli) -> lsqgan::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    log::debug!("running {}", cli.command.name());
    match &cli.command {
        Command::TrainAe(a) => commands::train_ae(a),
        Command::ExtractFeatures(a) => commands::extract_features(a),
        Command::TrainGan(a) => commands::train_gan(a),
        Command::Generate(a) => commands::generate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::BpScan(a) => commands::bp_scan(a),
        Command::BoundTable(a) => commands::bound_table(a),
        Command::ShotScan(a) => commands::shot_scan(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = Cli::parse_from(argv);
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
