mod args;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::{Cli, Command};
use run::{read_echo, DataError, Run};

const USAGE_ERROR: u8 = 1;
const DATA_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return usage_error(e),
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match resolve(cli.command).and_then(|run| run.execute()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(DATA_ERROR)
        }
    }
}

fn resolve(command: Command) -> Result<Run, DataError> {
    match command {
        Command::Clean(a) => Run::clean(&a),
        Command::Mask(a) => Run::mask(&a),
        Command::Cv(a) => Run::cv(&a),
        Command::Sweep(a) => Run::sweep(&a),
        Command::Features(a) => Run::features(&a),
        Command::Replay(a) => {
            let mut run = read_echo(&a.config)?.run;
            if let Some(dir) = &a.out {
                run.redirect(dir);
            }
            Ok(run)
        }
    }
}

/// Help and version requests exit 0; anything else prints the error and
/// the help of the subcommand involved, then exits 1.
fn usage_error(e: clap::Error) -> ExitCode {
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = e.print();
        return ExitCode::SUCCESS;
    }
    let _ = e.print();
    let mut cmd = Cli::command();
    let sub = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let help = match sub.as_deref().and_then(|name| cmd.find_subcommand_mut(name)) {
        Some(sub) => sub.render_help(),
        None => cmd.render_help(),
    };
    eprintln!("\n{help}");
    ExitCode::from(USAGE_ERROR)
}
