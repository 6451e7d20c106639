//! Configuration-driven orchestration of the winged-cavity toolchain:
//! single runs, Cartesian sweeps, the geometry to cooperativity pipeline,
//! deterministic CSV output and a content-addressed result cache.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod error;
pub mod stages;
pub mod sweep;
pub mod table;

use std::path::PathBuf;

use cache::{Cache, Lookup};
use config::{RunConfig, Stage};
use error::CliError;
use stages::Context;

/// Overrides the cache directory when `--cache` is absent.
pub const CACHE_ENV: &str = "WINGQED_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Modes,
    Mirror,
    QedDynamics,
    QedSpectrum,
    Pipeline,
    /// Runs `sweep.stage` over the configured axes.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Modes => "modes",
            Command::Mirror => "mirror",
            Command::QedDynamics => "qed-dynamics",
            Command::QedSpectrum => "qed-spectrum",
            Command::Pipeline => "pipeline",
            Command::Sweep => "sweep",
        }
    }

    fn stage(self, cfg: &RunConfig) -> Result<Stage, CliError> {
        Ok(match self {
            Command::Modes => Stage::Modes,
            Command::Mirror => Stage::Mirror,
            Command::QedDynamics => Stage::QedDynamics,
            Command::QedSpectrum => Stage::QedSpectrum,
            Command::Pipeline => Stage::Pipeline,
            Command::Sweep => cfg
                .sweep
                .as_ref()
                .and_then(|s| s.stage)
                .ok_or_else(|| CliError::config("the sweep subcommand needs `sweep.stage`"))?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub cache: Option<PathBuf>,
    pub jobs: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub run_id: String,
    pub csv: Vec<u8>,
    pub cached: bool,
}

pub fn resolve_config(inv: &Invocation) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&inv.config)?;
    if let (Some(seed), Some(solver)) = (inv.seed, cfg.solver.as_mut()) {
        solver.seed = seed;
    }
    Ok(cfg)
}

pub fn execute(inv: &Invocation) -> Result<Outcome, CliError> {
    let cfg = resolve_config(inv)?;
    let stage = inv.command.stage(&cfg)?;
    let id = cache::run_id(&cfg, inv.command.name());
    let cache_dir = inv
        .cache
        .clone()
        .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
    let cache = cache_dir
        .map(|d| Cache::open(&d).map_err(|e| CliError::io(format!("cache {}: {e}", d.display()))))
        .transpose()?;
    log::info!(
        "event=run_start subcommand={} stage={} run_id={id}",
        inv.command.name(),
        stage.name()
    );
    if let Some(c) = &cache {
        if let Lookup::Hit(csv) = c.lookup(&id) {
            log::info!("event=cache_hit run_id={id}");
            return Ok(Outcome {
                exit_code: 0,
                run_id: id,
                csv,
                cached: true,
            });
        }
        log::info!("event=cache_miss run_id={id}");
    }
    let ctx = Context {
        jobs: inv.jobs,
        cache: cache.clone(),
    };
    let out = stages::run_stage(&cfg, stage, &ctx)?;
    let csv = out.table.to_csv().into_bytes();
    let exit_code = out.exit_code();
    if let (Some(c), 0) = (&cache, exit_code) {
        c.store(&id, &csv)
            .map_err(|e| CliError::io(format!("cache store: {e}")))?;
        log::info!("event=cache_store run_id={id}");
    }
    log::info!(
        "event=run_done run_id={id} rows={} exit_code={exit_code}",
        out.table.rows.len()
    );
    Ok(Outcome {
        exit_code,
        run_id: id,
        csv,
        cached: false,
    })
}
