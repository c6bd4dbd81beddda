use std::process::ExitCode;

use ambc_cli::CliError;

fn main() -> ExitCode {
    match ambc_cli::run(std::env::args_os(), |msg| eprintln!("ambc: {msg}")) {
        Ok(paths) => {
            for p in paths {
                eprintln!("ambc: wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(CliError::Help(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
