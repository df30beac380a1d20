use std::process::ExitCode;

use clap::Parser;

use diagwalk_cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.resolve().and_then(|cfg| execute(&cfg));
    match result {
        Ok(record) => {
            println!("wrote {}", record.dir.display());
            match record.failure {
                Some(msg) => {
                    eprintln!("experiment failed: {msg}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
