use circle_tci_cli::{emit, run, Cli};
use clap::Parser;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Err(e) = emit(&report, &cli.common) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code());
    }
    for c in report.failures() {
        eprintln!("violation: {}", c.name);
    }
    ExitCode::from(report.exit_code())
}
