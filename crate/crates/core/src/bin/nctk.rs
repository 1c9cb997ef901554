//! `nctk <kind> --config <path> [--out <dir>] [--seed <u64>] [--threads <k>]`
//!
//! Exit status: 0 when every check passes, 1 when a check fails, 2 on a
//! configuration or input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nctk::config::parse_config_file;
use nctk::harness::{run_experiment, ExperimentKind};
use nctk::NctkError;

#[derive(Parser, Debug)]
#[command(name = "nctk", version, about = "Non-classical transport experiments")]
struct Cli {
    /// coeffs | lambda-sweep | converge | mc-compare | lorentz-tail | wellposed-check
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "NCTK_THREADS")]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<bool, NctkError> {
    let kind: ExperimentKind = cli.kind.parse()?;
    let mut cfg = parse_config_file(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.set_output(out.clone());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| NctkError::Config {
            key: "--threads".into(),
            message: e.to_string(),
        })?;
    let report = pool.install(|| run_experiment(kind, &cfg))?;
    print!("{}", report.summary());
    println!(
        "{} {} -> {}",
        kind.as_str(),
        if report.all_pass { "passed" } else { "failed" },
        cfg.output.display()
    );
    Ok(report.all_pass)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("nctk: {e}");
            ExitCode::from(2)
        }
    }
}
