use std::io::Write;
use std::process::ExitCode;

use chaseplan::cli::{run, Cli};
use chaseplan::error::EXIT_USAGE;
use clap::Parser;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            if code != 0 {
                let j = serde_json::json!({"error": "usage", "message": e.to_string(), "exit_code": code});
                eprintln!("{j}");
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(summary) => {
            let _ = std::io::stdout().write_all(summary.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
