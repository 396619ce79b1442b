//! `fracsde`: run one experiment described by a TOML file.
//!
//! Exit codes: 0 when every verdict passes, 1 when a tolerance fails, 2 for
//! configuration errors and 3 for numerical failures.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

use config::ExperimentConfig;

#[derive(Parser, Debug)]
#[command(name = "fracsde", version = report::VERSION, about = "Monte Carlo experiments for SDEs driven by fractional Brownian motion")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Replace `mc.seed`; the report echoes the seed actually used.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Directory for report.toml, header.toml and the CSV files.
    #[arg(long, default_value = "fracsde-out")]
    out_dir: PathBuf,
    /// Check the configuration and exit without computing anything.
    #[arg(long)]
    validate_only: bool,
}

const CONFIG_ERROR: u8 = 2;
const NUMERICAL_ERROR: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let path = cli.config.to_string_lossy().into_owned();
    let (mut cfg, src) = match ExperimentConfig::load(&path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if let Some(seed) = cli.seed_override {
        match cfg.mc.as_mut() {
            Some(mc) => mc.seed = seed,
            None => log::warn!("--seed-override ignored: experiment has no [mc] section"),
        }
    }
    let validated = match cfg.validate_in(&src) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if cli.validate_only {
        println!("ok");
        return ExitCode::SUCCESS;
    }

    if let Some(n) = std::env::var("FRACSDE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("FRACSDE_THREADS ignored: {e}");
        }
    }

    let started = Instant::now();
    let outcome = match run::run(&validated) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(NUMERICAL_ERROR);
        }
    };
    let header = report::Header {
        timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        config_path: path,
    };
    if let Err(e) = report::write_all(&cli.out_dir, &validated.config, &outcome, &header) {
        eprintln!("cannot write reports to {}: {e}", cli.out_dir.display());
        return ExitCode::from(NUMERICAL_ERROR);
    }

    for v in &outcome.verdicts {
        println!(
            "{} {}: {} (value {:.4e}, tolerance {:.4e})",
            if v.passed { "PASS" } else { "FAIL" },
            v.name,
            v.detail,
            v.value,
            v.tolerance
        );
    }
    for w in &outcome.warnings {
        println!("warning: {w}");
    }
    println!("report: {}", cli.out_dir.join("report.toml").display());
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
