use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use plastiflow_cli::config::{parse_config_file, OUT_DIR_ENV};
use plastiflow_cli::scenario::{overshoot_csv, run_scenario, ScenarioKind};

/// Plasticity-driven flow control simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Repeated runs of each configured rule.
    Simulate { config: PathBuf },
    /// Every configured rule over its parameter grid.
    Sweep { config: PathBuf },
    /// Base flows plus a temporary burst of extra flows.
    Rushhour { config: PathBuf },
    /// Size, degree and path statistics of the configured network.
    Topo { config: PathBuf },
    /// Two-flow overshoot table.
    Overshoot {
        #[arg(long, default_value_t = 1000)]
        capacity: u32,
        #[arg(long, default_value_t = 100_000)]
        max_steps: u32,
        /// Output directory (overrides the environment variable).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let (kind, path) = match cli.command {
        Command::Simulate { config } => (ScenarioKind::Simulate, config),
        Command::Sweep { config } => (ScenarioKind::Sweep, config),
        Command::Rushhour { config } => (ScenarioKind::RushHour, config),
        Command::Topo { config } => (ScenarioKind::Topo, config),
        Command::Overshoot { capacity, max_steps, out_dir } => {
            let dir = out_dir
                .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            let path = dir.join("overshoot.csv");
            let table = overshoot_csv(capacity, max_steps)?;
            table.write(&path).with_context(|| format!("writing {}", path.display()))?;
            print!("{}", table.to_csv());
            eprintln!("wrote {}", path.display());
            return Ok(());
        }
    };
    let cfg = parse_config_file(&path).with_context(|| format!("reading {}", path.display()))?.with_env_overrides();
    for file in run_scenario(kind, cfg)? {
        eprintln!("wrote {}", file.display());
    }
    Ok(())
}
