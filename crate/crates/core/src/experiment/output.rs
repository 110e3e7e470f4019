use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::nbv::format_f64;
use crate::VERSION;

use super::ExperimentConfig;

/// One pass/fail check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, passed: value >= threshold }
    }
}

/// A CSV table: header plus rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Writes `# reflected-flow <version>` and `# config <json>` comment lines
    /// followed by the CSV body.
    pub fn write<W: Write>(&self, mut writer: W, config: &ExperimentConfig) -> Result<()> {
        writeln!(writer, "# reflected-flow {VERSION}")?;
        writeln!(writer, "# config {}", serde_json::to_string(config)?)?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Cell formatting shared by all tables: shortest round-trip for floats.
pub fn cell(v: f64) -> String {
    format_f64(v)
}

/// The JSON document of a run.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub version: &'static str,
    pub kind: &'static str,
    pub config_echo: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

/// Everything a run produces before it touches the filesystem.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn new(config: &ExperimentConfig, checks: Vec<Check>, results: impl Serialize, tables: Vec<Table>) -> Result<Self> {
        let report = Report {
            version: VERSION,
            kind: config.kind.name(),
            config_echo: config.clone(),
            passed: checks.iter().all(|c| c.passed),
            checks,
            results: serde_json::to_value(results)?,
        };
        Ok(Self { report, tables })
    }

    pub fn passed(&self) -> bool {
        self.report.passed
    }

    /// Writes `report.json` and one `<name>.csv` per table into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let path = dir.join("report.json");
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(&mut w, &self.report)?;
        writeln!(w)?;
        w.flush()?;
        files.push(path);
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            t.write(BufWriter::new(File::create(&path)?), &self.report.config_echo)?;
            files.push(path);
        }
        Ok(files)
    }
}
