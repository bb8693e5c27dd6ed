use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use idla::lab::{run, Command, Config};

#[derive(Parser)]
#[command(name = "idla-lab", version, about = "IDLA simulation and verification lab")]
#[command(after_help = config_help())]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Comma-separated particle counts.
    #[arg(long, global = true)]
    sizes: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Grow clusters for every size and trial; write snapshots and radii.
    Simulate,
    /// Reload snapshots, scan events and fit fluctuations against ln r.
    Analyze,
    /// Potential-kernel exactness and asymptotics.
    Kernel,
    /// Detector field and region sweep over poles.
    Harmonic,
    /// Stopped-particle martingale gates.
    Martingale,
    /// Shell profile and tower decomposition checks.
    Tower,
}

fn config_help() -> String {
    Config::help_table()
}

fn resolve(cli: &Cli) -> idla::Result<Config> {
    let mut c = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(t) = cli.trials {
        c.trials = t;
    }
    if let Some(s) = &cli.sizes {
        c.set("sizes", s)?;
    }
    if let Some(o) = &cli.out {
        c.out_dir = o.clone();
    }
    if let Some(t) = cli.threads {
        c.threads = t;
    }
    Ok(c)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Analyze => Command::Analyze,
        Cmd::Kernel => Command::Kernel,
        Cmd::Harmonic => Command::Harmonic,
        Cmd::Martingale => Command::Martingale,
        Cmd::Tower => Command::Tower,
    };
    let outcome = resolve(&cli).and_then(|c| run(command, &c));
    match outcome {
        Ok(o) => {
            for g in &o.gates {
                println!("{} {}", if g.pass { "PASS" } else { "FAIL" }, g.name);
            }
            if o.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("idla-lab: {e}");
            ExitCode::from(2)
        }
    }
}
