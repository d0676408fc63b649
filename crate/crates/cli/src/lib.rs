//! Config-driven front end: reads a flat config file, runs one command and
//! writes `<prefix>.csv` and `<prefix>.json` into the output directory.

pub mod catalog;
pub mod commands;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub use commands::{Check, Command, Outcome};
pub use config::{ConfigError, RawConfig, RunConfig};

/// Command-line level settings that override or complement the file.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub pass: bool,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub summary: Value,
}

pub fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let raw = RawConfig::load(path)?;
    let mut cfg = RunConfig::from_raw(&raw)?;
    // relative output directories are taken from the config file's location
    if cfg.output_dir.is_relative() {
        if let Some(parent) = path.parent() {
            cfg.output_dir = parent.join(&cfg.output_dir);
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

pub fn summary(command: Command, cfg: &RunConfig, threads: usize, outcome: &Outcome) -> Value {
    let mut tolerances = json!({ "quadrature": cfg.quad });
    if let (Some(dst), Some(src)) = (tolerances.as_object_mut(), outcome.tolerances.as_object()) {
        dst.extend(src.clone());
    }
    json!({
        "command": command.name(),
        "pass": outcome.pass(),
        "seed": cfg.seed,
        "threads": threads,
        "tolerances": tolerances,
        "checks": outcome.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        "results": outcome.results,
    })
}

/// Runs the command on a pool of `threads` workers (all cores when unset)
/// and writes the artifacts.
pub fn run(inv: &Invocation) -> Result<Report> {
    let cfg = load_config(&inv.config, inv.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(inv.threads.unwrap_or(0))
        .build()
        .context("cannot start the worker pool")?;
    let threads = pool.current_num_threads();
    let outcome = pool.install(|| commands::execute(inv.command, &cfg))?;

    let prefix = cfg
        .output_prefix
        .clone()
        .unwrap_or_else(|| inv.command.name().to_string());
    fs::create_dir_all(&cfg.output_dir).with_context(|| {
        format!(
            "cannot create output directory {}",
            cfg.output_dir.display()
        )
    })?;
    let csv_path = cfg.output_dir.join(format!("{prefix}.csv"));
    let json_path = cfg.output_dir.join(format!("{prefix}.json"));
    let mut summary = summary(inv.command, &cfg, threads, &outcome);
    summary["outputs"] = json!({ "csv": csv_path, "json": json_path });

    fs::write(&csv_path, &outcome.csv)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("cannot write {}", json_path.display()))?;
    log::info!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(Report {
        pass: outcome.pass(),
        csv_path,
        json_path,
        summary,
    })
}
