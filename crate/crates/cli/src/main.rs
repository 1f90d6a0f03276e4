use std::path::PathBuf;
use std::process::ExitCode;

use apselect::config::Scenario;
use clap::Parser;

/// Runs a Besicovitch almost periodic scenario from a JSON configuration.
#[derive(Debug, Parser)]
#[command(name = "apselect", version)]
struct Args {
    scenario: Scenario,
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(apselect::EXIT_INPUT as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let summary = apselect::run(args.scenario, &args.config, &args.out, args.seed);
    if summary.exit_code == apselect::EXIT_OK {
        println!("{}", summary.message);
    } else {
        eprintln!("{}", summary.message);
    }
    ExitCode::from(summary.exit_code as u8)
}
