use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use mvpois_cli::commands::{run, Cli};
use mvpois_cli::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()) {
                eprintln!("error: {}", CliError::io("stdout", e));
                return ExitCode::from(CliError::EXIT_IO as u8);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
