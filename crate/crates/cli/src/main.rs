//! `qprobe`: reproducible batch front-end for the probe-spectroscopy
//! laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "qprobe", version, about = "Biased-probe spectroscopy laboratory")]
struct Cli {
    /// Config file: TOML, or a manifest.json from a previous run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Results are identical for any value.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact + sampled transition probabilities over a (lambda, tau) grid.
    Sweep,
    /// Known-frequency oscillation fits per tau from a sweep CSV.
    Fit,
    /// Tau-series assembly and Fourier spectrum from a fit CSV.
    Reconstruct,
    /// Expansion-validity reports over a parameter list.
    Validate,
    /// End-to-end spin-cluster spectrum reconstruction.
    SpinDemo,
    /// End-to-end vibrational-mode reconstruction and thermometry.
    VibronicDemo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.jobs > 0 {
        // Determinism never depends on the pool size; this is throughput only.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<config::ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let config_path = cli
        .config
        .clone()
        .ok_or_else(|| config::ConfigError("--config is required".into()))?;
    let (config, config_toml, manifest_seed) = config::load_config(&config_path)?;
    // CLI flag wins, then a manifest's recorded override, then the config.
    let seed_override = cli.seed.or(manifest_seed);

    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Sweep => commands::cmd_sweep(&config, &config_toml, &cli.out, seed_override),
        Command::Fit => commands::cmd_fit(&config, &config_toml, &cli.out, seed_override),
        Command::Reconstruct => {
            commands::cmd_reconstruct(&config, &config_toml, &cli.out, seed_override)
        }
        Command::Validate => commands::cmd_validate(&config, &config_toml, &cli.out, seed_override),
        Command::SpinDemo => commands::cmd_spin_demo(&config, &config_toml, &cli.out, seed_override),
        Command::VibronicDemo => {
            commands::cmd_vibronic_demo(&config, &config_toml, &cli.out, seed_override)
        }
    }
}
