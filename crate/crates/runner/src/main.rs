use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lattice_runner::{list_experiments, run, ExperimentConfig, RunOptions, RunnerError};

/// Runs one lattice-wave experiment and writes its artifacts.
#[derive(Debug, Parser)]
#[command(name = "runner", version)]
struct Cli {
    /// Experiment name, or `list-experiments`.
    experiment: String,
    /// TOML configuration; every field has a default.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for internal parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// RNG seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    if cli.experiment == "list-experiments" {
        for (name, description) in list_experiments() {
            println!("{name}\t{description}");
        }
        return ExitCode::SUCCESS;
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("runner: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<bool, RunnerError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(RunnerError::Config { field: "--jobs".into(), reason: "must be at least 1".into() });
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(RunnerError::runtime)?;
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let record = run(&cli.experiment, cfg, &RunOptions { out: cli.out.clone(), seed: cli.seed })?;
    for v in &record.verdicts {
        let value = record.scalars.get(&v.scalar).copied().unwrap_or(f64::NAN);
        println!(
            "{} {}: {} = {value:e} ({:?} {:e})",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.scalar,
            v.bound,
            v.limit
        );
    }
    println!("{}: {} in {:.2}s", record.experiment, if record.passed() { "pass" } else { "fail" }, record.wall_seconds);
    Ok(record.passed())
}
