//! Run manifest, structured report, CSV tables and the timing sidecar.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use logweight::report::{Check, ExperimentReport, Table};
use serde::Serialize;

use crate::CliError;

/// Everything needed to rerun a command. Wall-clock timing lives in a sidecar
/// so the report itself stays byte-identical across reruns.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub arguments: Vec<String>,
    pub grid: BTreeMap<String, String>,
    /// Config after file loading and overrides.
    pub config: toml::Table,
    /// File names inside the output directory.
    pub outputs: Vec<String>,
}

/// A command's result before it is written out.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub report: ExperimentReport,
    /// Exact (rational or textual) results, grouped by section.
    pub exact: BTreeMap<String, BTreeMap<String, String>>,
    pub grid: BTreeMap<String, String>,
    /// Configuration problems found while running; they turn the exit code into 2.
    pub invalid: bool,
}

impl Outcome {
    pub fn new(report: ExperimentReport) -> Self {
        Self { report, ..Default::default() }
    }

    pub fn exact(&mut self, section: &str, key: &str, value: impl ToString) -> &mut Self {
        self.exact.entry(section.to_string()).or_default().insert(key.to_string(), value.to_string());
        self
    }

    pub fn passed(&self) -> bool {
        self.report.passed()
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    experiment: &'a str,
    passed: bool,
    notes: &'a [String],
    manifest: &'a RunManifest,
    parameters: &'a BTreeMap<String, String>,
    metrics: &'a BTreeMap<String, f64>,
    exact: &'a BTreeMap<String, BTreeMap<String, String>>,
    checks: &'a [Check],
}

#[derive(Serialize)]
struct Timing<'a> {
    command: &'a str,
    wall_seconds: f64,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn table_csv(table: &Table) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv of numbers is utf-8"))
}

pub fn render_report(outcome: &Outcome, manifest: &RunManifest) -> Result<String, CliError> {
    let r = &outcome.report;
    let file = ReportFile {
        experiment: &r.experiment,
        passed: r.passed() && !outcome.invalid,
        notes: &r.notes,
        manifest,
        parameters: &r.parameters,
        metrics: &r.metrics,
        exact: &outcome.exact,
        checks: &r.checks,
    };
    toml::to_string(&file).map_err(|e| CliError::Config(format!("report serialization: {e}")))
}

/// Writes `<cmd>.report.toml`, one `<cmd>.<table>.csv` per table and `<cmd>.timing.toml`.
pub fn write_outputs(
    dir: &Path,
    mut manifest: RunManifest,
    outcome: &Outcome,
    wall_seconds: f64,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let cmd = manifest.command.clone();
    let mut written = Vec::new();
    let mut names = Vec::new();
    for (name, table) in &outcome.report.tables {
        let file = format!("{cmd}.{name}.csv");
        let path = dir.join(&file);
        std::fs::write(&path, table_csv(table)?).map_err(io(&path))?;
        names.push(file);
        written.push(path);
    }
    let report_name = format!("{cmd}.report.toml");
    names.push(report_name.clone());
    manifest.outputs = names;
    manifest.grid = outcome.grid.clone();
    let path = dir.join(&report_name);
    std::fs::write(&path, render_report(outcome, &manifest)?).map_err(io(&path))?;
    written.push(path);
    let timing = toml::to_string(&Timing { command: &cmd, wall_seconds })
        .map_err(|e| CliError::Config(format!("timing serialization: {e}")))?;
    let path = dir.join(format!("{cmd}.timing.toml"));
    std::fs::write(&path, timing).map_err(io(&path))?;
    written.push(path);
    Ok(written)
}
