use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use irsa_core::harness::{run_sweep, Mode};
use irsa_core::output::{emit_csv, manifest_path, RunManifest};
use irsa_core::{load_config, LoadedConfig, Perspective};

#[derive(Parser)]
#[command(
    name = "irsa",
    version,
    about = "Multi-receiver NOMA-IRSA simulator and density-evolution analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep.
    Sim(RunArgs),
    /// Density-evolution sweep (k-receiver bound).
    De(RunArgs),
    /// Simulation and analysis side by side.
    Run(RunArgs),
    /// Check a config without running it.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for frame simulation.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = ["paper", "edge"])]
    de_perspective: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
}

fn load(path: &Path) -> anyhow::Result<LoadedConfig> {
    load_config(path).with_context(|| format!("loading config {}", path.display()))
}

fn run(args: RunArgs, modes: Vec<Mode>) -> anyhow::Result<()> {
    let mut cfg = load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.set_seed(seed);
    }
    if let Some(p) = &args.de_perspective {
        let perspective: Perspective = p.parse().map_err(anyhow::Error::msg)?;
        cfg.options.de.perspective = perspective;
        cfg.file.de.perspective = perspective;
    }
    if modes.contains(&Mode::Simulate) && cfg.master_seed.is_none() {
        bail!("simulation needs a seed: set master_seed in the config or pass --seed");
    }
    cfg.options.workers = args.threads;
    cfg.spec.modes = modes.clone();
    cfg.file.modes = modes;

    let records = run_sweep(&cfg.spec, &cfg.options)?;
    emit_csv(&records, &args.out).with_context(|| format!("writing {}", args.out.display()))?;
    let manifest = RunManifest::new(cfg.config_hash(), cfg.master_seed, &records);
    let mpath = manifest_path(&args.out);
    manifest
        .write(&mpath)
        .with_context(|| format!("writing {}", mpath.display()))?;
    log::info!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> anyhow::Result<()> {
    let cfg = load(&args.config)?;
    let summary = serde_json::json!({
        "ok": true,
        "dist": cfg.spec.base.dist.to_string(),
        "avg_degree": cfg.spec.base.dist.avg_degree(),
        "loads": cfg.spec.loads,
        "k": cfg.spec.k_values,
        "frames_per_point": cfg.spec.frames_per_point(),
        "master_seed": cfg.master_seed,
        "config_hash": cfg.config_hash(),
    });
    println!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sim(a) => run(a, vec![Mode::Simulate]),
        Command::De(a) => run(a, vec![Mode::Analyze]),
        Command::Run(a) => run(a, vec![Mode::Simulate, Mode::Analyze]),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({ "error": format!("{e:#}") });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
