use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wingqed_cli::{execute, Command, Invocation};

#[derive(Parser)]
#[command(name = "wingqed", version, about = "Winged-cavity modes, mirrors and cavity QED")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Resonant modes with Q, V and classification.
    Modes(Common),
    /// Reflectance of the quarter-wave mirror stack.
    Mirror(Common),
    /// Master-equation time evolution.
    QedDynamics(Common),
    /// Steady-state g2(0) and photon number versus drive detuning.
    QedSpectrum(Common),
    /// Geometry, modes, mirror loss and cooperativity.
    Pipeline(Common),
    /// The stage named by `sweep.stage` over the configured axes.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result cache directory; falls back to WINGQED_CACHE_DIR.
    #[arg(long)]
    cache: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format(|buf, rec| writeln!(buf, "level={} {}", rec.level(), rec.args()))
        .target(env_logger::Target::Stderr)
        .init();

    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Modes(c) => (Command::Modes, c),
        Cmd::Mirror(c) => (Command::Mirror, c),
        Cmd::QedDynamics(c) => (Command::QedDynamics, c),
        Cmd::QedSpectrum(c) => (Command::QedSpectrum, c),
        Cmd::Pipeline(c) => (Command::Pipeline, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
    };
    let inv = Invocation {
        command,
        config: c.config,
        cache: c.cache,
        jobs: c.jobs.max(1),
        seed: c.seed,
    };
    let outcome = match execute(&inv) {
        Ok(o) => o,
        Err(e) => {
            log::error!("event=run_failed class={} message={:?}", e.kind.status(), e.message);
            return ExitCode::from(e.kind.exit_code() as u8);
        }
    };
    let written = match &c.out {
        Some(path) => std::fs::write(path, &outcome.csv),
        None => std::io::stdout().write_all(&outcome.csv),
    };
    if let Err(e) = written {
        log::error!("event=write_failed message={:?}", e.to_string());
        return ExitCode::from(1);
    }
    ExitCode::from(outcome.exit_code as u8)
}
