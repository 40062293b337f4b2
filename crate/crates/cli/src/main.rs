use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use tenfill_cli::{run, ExperimentConfig};

/// Completes an order-3 tensor from partial fine-grained and full coarse
/// observations.
#[derive(Debug, Parser)]
#[command(name = "tenfill", version)]
struct Args {
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let start = Instant::now();
    let result = ExperimentConfig::from_file(&args.config).and_then(|mut cfg| {
        if let Some(seed) = args.seed {
            cfg.solver.seed = seed;
        }
        run(&cfg).map(|s| (cfg, s))
    });
    match result {
        Ok((cfg, summary)) => {
            if !args.quiet {
                print!("{}", summary.to_csv());
                eprintln!(
                    "wrote {} in {:.1} s",
                    cfg.output.display(),
                    start.elapsed().as_secs_f64()
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
