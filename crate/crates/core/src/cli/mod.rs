//! Command-line front end: `rqf <experiment> --config <path>` and
//! `rqf validate <path>`.

mod config;
mod output;
mod run;
pub mod svg;

pub use config::{Experiment, LyapunovFlow, RunConfig, Seeds};
pub use output::{FileEntry, RunManifest};

use crate::error::{Result, RqfError};
use crate::parallel::{threads_from_env, with_threads};
use clap::Parser;
use output::OutputDir;
use serde_json::json;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "rqf", version, about = "Random quadratic form flows on the sphere")]
struct Args {
    /// Experiment name, or `validate`.
    command: String,
    /// Config file for `validate`.
    path: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `seeds.master`.
    #[arg(long)]
    seed: Option<u64>,
    /// Root output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_svg: bool,
}

/// Runs one experiment and writes `<root>/<experiment>-<seed>/`.
pub fn run(experiment: Experiment, config: &RunConfig, root: &Path, svg: bool) -> Result<RunManifest> {
    let mut cfg = config.clone();
    if let Some(e) = cfg.experiment {
        if e != experiment {
            return Err(RqfError::Config(format!("config is for experiment {e}, not {experiment}")));
        }
    }
    cfg.experiment = Some(experiment);
    cfg.validate()?;
    let start = Instant::now();
    let mut out = OutputDir::create(root, experiment, cfg.seeds.master, svg)?;
    let warnings = run::run_experiment(experiment, &cfg, &mut out)?;
    out.finish(experiment, &cfg, warnings, start.elapsed().as_secs_f64())
}

fn error_json(e: &RqfError) -> String {
    json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
        "valid_experiments": Experiment::valid_names(),
    })
    .to_string()
}

fn validate_file(path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RqfError::Config(format!("cannot read {}: {e}", path.display())))?;
    let violations = match RunConfig::from_json(&text) {
        Ok(cfg) => cfg.violations(),
        Err(e) => vec![e.to_string()],
    };
    println!("{}", json!({ "valid": violations.is_empty(), "violations": violations }));
    Ok(if violations.is_empty() { 0 } else { 2 })
}

fn dispatch(args: Args) -> Result<i32> {
    if args.command == "validate" {
        let path = args
            .path
            .or(args.config)
            .ok_or_else(|| RqfError::Config("usage: rqf validate <path>".into()))?;
        return validate_file(&path);
    }
    let experiment: Experiment = args.command.parse()?;
    let path = args.config.ok_or_else(|| RqfError::Config("--config <path> is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(seed) = args.seed {
        cfg.seeds.master = seed;
    }
    let root = args.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let manifest = with_threads(threads_from_env(), || run(experiment, &cfg, &root, !args.no_svg))??;
    let dir = root.join(format!("{experiment}-{}", cfg.seeds.master));
    println!(
        "{}",
        json!({
            "output": dir.join("manifest.json"),
            "content_hash": manifest.content_hash,
            "warnings": manifest.warnings,
        })
    );
    Ok(0)
}

/// Entry point of the `rqf` binary; returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = impl Into<OsString> + Clone>) -> i32 {
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            e.exit_code()
        }
    }
}
