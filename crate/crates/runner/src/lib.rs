//! Experiment runner for `lattice-wave`.
//!
//! `runner <experiment> --config <path> [--out <dir>] [--jobs N] [--seed S]`
//! runs one named experiment, writes its CSV and JSON artifacts plus a
//! `result.json` record, and exits 0 only if every verdict passes.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod record;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::ExperimentConfig;
pub use error::RunnerError;
pub use experiments::CATALOG;
pub use record::ResultRecord;

use experiments::Context;
use output::ArtifactDir;

/// Overrides the output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "LATTICE_RUNNER_OUT";

/// Catalog lines `name<TAB>description` in stable order.
pub fn list_experiments() -> Vec<(&'static str, &'static str)> {
    CATALOG.iter().map(|e| (e.name, e.description)).collect()
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Output directory: `--out`, then the environment override, then the
/// config, then `runner-out/<experiment>`.
pub fn output_dir(experiment: &str, cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| Path::new("runner-out").join(experiment))
}

pub fn run(experiment: &str, cfg: ExperimentConfig, opts: &RunOptions) -> Result<ResultRecord, RunnerError> {
    let exp = experiments::find(experiment)?;
    if let Some(named) = &cfg.experiment {
        config::check("experiment", named == experiment, "does not match the experiment on the command line")?;
    }
    cfg.validate()?;
    let start = Instant::now();
    let seed = opts.seed.or(cfg.seed).unwrap_or(0);
    let out = ArtifactDir::create(&output_dir(experiment, &cfg, opts))?;
    let echo = serde_json::to_value(&cfg).map_err(RunnerError::runtime)?;
    let mut ctx = Context { cfg, seed, out, record: ResultRecord::new(experiment, echo) };
    ctx.record.scalar("seed", seed as f64);
    exp.run(&mut ctx)?;
    let Context { mut out, mut record, .. } = ctx;
    record.artifacts =
        out.written().iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    record.artifacts.push("result.json".into());
    record.wall_seconds = start.elapsed().as_secs_f64();
    out.write_json("result.json", &record)?;
    Ok(record)
}
