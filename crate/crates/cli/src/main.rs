use std::io::Write;

use clap::Parser;
use tmfa_cli::{configure_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(report) => {
            // a closed pipe downstream is not an error of the run
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "command = {}", cli.command.name());
            for line in &report.summary {
                let _ = writeln!(out, "{line}");
            }
            for p in &report.written {
                let _ = writeln!(out, "wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("{}", e.machine_line());
            std::process::exit(e.exit_code());
        }
    }
}
