//! Orchestration: resolve the config, run on a bounded pool, write artifacts
//! atomically.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::{self, ExperimentConfig};
use crate::experiments::{self, Artifacts};
use crate::{exit, CliError};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub no_plots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    Oracle,
}

#[derive(Debug)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub lines: Vec<String>,
    pub exit_code: i32,
}

pub fn resolve(path: &Path, o: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut cfg = config::load(path)?;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(d) = &o.out {
        cfg.output_dir = Some(d.clone());
    }
    if o.no_plots {
        cfg.plots = false;
    }
    if cfg.output_dir.is_none() {
        return Err(CliError::Config("no output directory: set `output_dir` or pass --out".into()));
    }
    if o.workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    Ok(cfg)
}

/// Runs one experiment end to end. Errors leave no output directory behind.
pub fn execute(path: &Path, o: &Overrides, mode: Mode) -> Result<RunSummary, CliError> {
    let cfg = resolve(path, o)?;
    let out_dir = cfg.output_dir.clone().expect("checked in resolve");
    if out_dir.exists() {
        let empty = fs::read_dir(&out_dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?
            .next()
            .is_none();
        if !empty {
            return Err(CliError::Config(format!(
                "output directory {} exists and is not empty",
                out_dir.display()
            )));
        }
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = o.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let artifacts = pool.install(|| match mode {
        Mode::Run => experiments::run(&cfg),
        Mode::Oracle => experiments::run_oracle(&cfg),
    })?;
    let staging = staging_dir(&out_dir);
    if let Err(e) = write_all(&staging, &cfg, &artifacts, mode) {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    let publish = || -> std::io::Result<()> {
        if out_dir.exists() {
            fs::remove_dir(&out_dir)?;
        }
        fs::rename(&staging, &out_dir)
    };
    if let Err(e) = publish() {
        let _ = fs::remove_dir_all(&staging);
        return Err(CliError::Io(format!("{}: {e}", out_dir.display())));
    }
    let failed = artifacts.reports.iter().any(|r| !r.pass && !r.inconclusive);
    let lines = artifacts
        .reports
        .iter()
        .map(|r| match r.params.get("N") {
            Some(n) => format!("[{}] {} (N={n})", r.status(), r.name),
            None => format!("[{}] {}", r.status(), r.name),
        })
        .collect();
    Ok(RunSummary {
        out_dir,
        lines,
        exit_code: if failed { exit::CHECK_FAILED } else { exit::PASS },
    })
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    out.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

fn write_all(dir: &Path, cfg: &ExperimentConfig, a: &Artifacts, mode: Mode) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", dir.display()));
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(io)?;
    }
    fs::create_dir_all(dir).map_err(io)?;
    let mut files = Vec::new();
    for t in &a.tables {
        t.write(dir)?;
        files.push(t.name.clone());
    }
    for (name, svg) in &a.plots {
        fs::write(dir.join(name), svg).map_err(io)?;
        files.push(name.clone());
    }
    let reports = serde_json::to_string_pretty(&a.reports).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("reports.json"), reports + "\n").map_err(io)?;
    let text: String = a.reports.iter().map(|r| r.render()).collect::<Vec<_>>().join("\n");
    fs::write(dir.join("reports.txt"), text).map_err(io)?;
    files.push("reports.json".into());
    files.push("reports.txt".into());

    // The output directory is where the run lands, not part of what it computes.
    let mut resolved = cfg.clone();
    resolved.output_dir = None;
    let checks: Vec<Value> = a
        .reports
        .iter()
        .map(|r| json!({ "name": r.name, "N": r.params.get("N"), "status": r.status(), "worst_margin": r.worst_margin }))
        .collect();
    let manifest = json!({
        "manifest_version": MANIFEST_VERSION,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "mode": match mode { Mode::Run => "run", Mode::Oracle => "oracle" },
        "experiment": cfg.experiment.kind(),
        "seed": cfg.seed,
        "resolved_config": resolved,
        "files": files,
        "checks": checks,
        "notes": a.notes,
    });
    let m = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(dir.join("manifest.json"), m + "\n").map_err(io)?;
    Ok(())
}
