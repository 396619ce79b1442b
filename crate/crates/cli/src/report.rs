//! Report files.
//!
//! `report.toml` is a pure function of the configuration and the code
//! version, so two runs of the same configuration give identical bytes:
//!
//! ```toml
//! [report]
//! artifact = "fracsde"
//! version = "0.1.0 (abc1234)"
//! experiment = "harnack"
//! passed = true
//! files = ["margins.csv"]
//! warnings = []
//!
//! [config]        # the configuration as run, seed override applied
//! [results]       # experiment-specific estimates
//! [[constants]]   # name, value, provenance
//! [[verdicts]]    # name, passed, value, tolerance, detail
//! ```
//!
//! Everything that changes between runs (timestamp, wall-clock, thread
//! count) goes to `header.toml`.

use std::path::Path;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::run::{Constant, CsvTable, Outcome, Verdict};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (", env!("FRACSDE_GIT_REV"), ")");

#[derive(Serialize)]
struct Summary<'a> {
    artifact: &'a str,
    version: &'a str,
    experiment: &'a str,
    passed: bool,
    files: Vec<&'a str>,
    warnings: &'a [String],
}

#[derive(Serialize)]
struct Report<'a> {
    report: Summary<'a>,
    config: &'a ExperimentConfig,
    results: &'a toml::Table,
    constants: &'a [Constant],
    verdicts: &'a [Verdict],
}

#[derive(Serialize)]
pub struct Header {
    pub timestamp_unix: u64,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub config_path: String,
}

pub fn render(config: &ExperimentConfig, out: &Outcome) -> String {
    let report = Report {
        report: Summary {
            artifact: "fracsde",
            version: VERSION,
            experiment: config.experiment.name(),
            passed: out.passed(),
            files: out.tables.iter().map(|t| t.file.as_str()).collect(),
            warnings: &out.warnings,
        },
        config,
        results: &out.results,
        constants: &out.constants,
        verdicts: &out.verdicts,
    };
    toml::to_string(&report).expect("report serialises")
}

fn write_csv(dir: &Path, table: &CsvTable) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join(&table.file))?;
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush()
}

pub fn write_all(dir: &Path, config: &ExperimentConfig, out: &Outcome, header: &Header) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.toml"), render(config, out))?;
    std::fs::write(dir.join("header.toml"), toml::to_string(header).expect("header serialises"))?;
    for t in &out.tables {
        write_csv(dir, t)?;
    }
    Ok(())
}
