use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gatedprobe::harness::{self, parse_grid, resolve_config};
use gatedprobe::montecarlo::{format_time_tags, simulate_trial};
use gatedprobe::{Error, Profile};

#[derive(Parser)]
#[command(name = "gatedprobe", version, about = "Heralded feed-forward transmission measurement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config layered over the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides master_seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    switch: Option<OnOff>,
    #[arg(long, global = true, value_enum, default_value = "desk")]
    profile: ProfileArg,
}

#[derive(Subcommand)]
enum Command {
    /// Theory curves of the advantage ratio.
    SweepAnalytic {
        #[arg(long, default_value = "0:1:0.05")]
        grid: String,
    },
    /// One calibrated measurement point: per-trial rows and a summary.
    Run {
        /// Also write the raw time tags of one trial to this file.
        #[arg(long)]
        tags: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        tags_trial: u64,
    },
    /// Simulated and analytic advantage over a transmission grid.
    Sweep {
        #[arg(long, default_value = "0.65,0.8,0.9,0.97,1.0")]
        grid: String,
    },
    /// Heralded g2(0) from triple coincidences (requires hbt_mode).
    G2,
}

#[derive(Clone, Copy, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

fn execute(cli: Cli) -> Result<(), Error> {
    let profile = match cli.profile {
        ProfileArg::Paper => Profile::Paper,
        ProfileArg::Desk => Profile::Desk,
    };
    let switch = cli.switch.map(|s| matches!(s, OnOff::On));
    let cfg = resolve_config(profile, cli.config.as_deref(), cli.seed, switch)?;

    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match cli.command {
        Command::SweepAnalytic { grid } => harness::sweep_analytic(&cfg, &parse_grid(&grid)?, &mut out)?,
        Command::Run { tags, tags_trial } => {
            harness::run(&cfg, &mut out)?;
            if let Some(path) = tags {
                let trial = simulate_trial(&cfg, tags_trial, true)?;
                std::fs::write(path, format_time_tags(&trial.tags.unwrap_or_default()))?;
            }
        }
        Command::Sweep { grid } => {
            harness::sweep(&cfg, &parse_grid(&grid)?, &mut out)?;
        }
        Command::G2 => {
            harness::g2(&cfg, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
