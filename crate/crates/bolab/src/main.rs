use std::path::PathBuf;
use std::process::ExitCode;

use bolab::{exit_code, run_to_dir, ExperimentConfig, Scenario};
use clap::Parser;

/// Run one Benjamin-Ono scenario and write its tables and manifest.
#[derive(Debug, Parser)]
#[command(name = "bolab", version)]
struct Cli {
    scenario: Scenario,
    /// Flat key=value config; missing keys (or no file) take the reference values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized suites.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap reports help and version as errors too.
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(cli.scenario, path),
        None => Ok(ExperimentConfig::reference(cli.scenario)),
    };
    let result = cfg.and_then(|cfg| {
        let dir = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        run_to_dir(&cfg, cli.seed, &dir).map(|m| (m, dir))
    });
    match result {
        Ok((manifest, dir)) => {
            for g in &manifest.gates {
                let verdict = if g.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} = {:e}", g.name, g.measured);
            }
            println!("wrote {}", dir.display());
            ExitCode::from(exit_code(&manifest) as u8)
        }
        Err(e) => {
            eprintln!("bolab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
