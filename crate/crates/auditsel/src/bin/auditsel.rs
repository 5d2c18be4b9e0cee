use clap::Parser;

use auditsel::cli::Cli;
use auditsel::commands::{run, EXIT_ERROR};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the generic error code; 2 means "above cutoff".
            std::process::exit(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    let code = match run(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("auditsel {}: error: {e:#}", cli.command.name());
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
