//! Experiment runner: configuration, deterministic seeding and report emission.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{apply_override, load, section, split_overrides, RunConfig};
use crate::output::{write_outputs, Outcome, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] logweight::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "logweight", version, about = "Log-weighted multilinear multiplier experiments")]
#[command(after_help = "Any config leaf can be overridden with --section.key=value, e.g. --growth.p=inf")]
pub struct Cli {
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for reports and CSV tables.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Partition of unity and profile support certificates.
    Partition,
    /// Growth of shifted square/maximal operator norms in log(e + |y|).
    Growth,
    /// Change of variables in L_p(l_p) and the shift identity.
    Changevars,
    /// Peetre maximal function cube ratios and the Fefferman-Stein ratio.
    Peetre,
    /// Square-function characterisation of L_2.
    Hardy,
    /// Exact exponent tables for p_1 … p_n (e.g. `4 4 4`, `inf` allowed).
    Lambda { exponents: Vec<String> },
    /// Vertex interpolation schedule for a full reciprocal point (e.g. `1/3 1/3 1/3 0`).
    Plan { point: Vec<String> },
    /// The sharpness construction: validation, cancellation, identity, ratio growth.
    Counterexample,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Partition => "partition",
            Command::Growth => "growth",
            Command::Changevars => "changevars",
            Command::Peetre => "peetre",
            Command::Hardy => "hardy",
            Command::Lambda { .. } => "lambda",
            Command::Plan { .. } => "plan",
            Command::Counterexample => "counterexample",
        }
    }

    fn arguments(&self) -> Vec<String> {
        match self {
            Command::Lambda { exponents } => exponents.clone(),
            Command::Plan { point } => point.clone(),
            _ => Vec::new(),
        }
    }
}

fn resolved<T: Serialize>(value: &T) -> Result<toml::Table, CliError> {
    toml::Table::try_from(value).map_err(|e| CliError::Config(format!("resolving config: {e}")))
}

/// Runs a command against a loaded config; returns the outcome and the resolved config.
pub fn execute(command: &Command, table: &toml::Table) -> Result<(Outcome, toml::Table), CliError> {
    let run: RunConfig = section(table, "run")?;
    let seed = run.seed;
    let mut config = toml::Table::new();
    config.insert("run".into(), resolved(&run)?.into());
    macro_rules! with_section {
        ($name:literal, $ty:ty, $f:expr) => {{
            let cfg: $ty = section(table, $name)?;
            config.insert($name.into(), resolved(&cfg)?.into());
            $f(&cfg)?
        }};
    }
    let outcome = match command {
        Command::Partition => with_section!("partition", config::PartitionConfig, commands::partition),
        Command::Growth => with_section!("growth", config::GrowthConfig, |c| commands::growth(c, seed)),
        Command::Changevars => {
            with_section!("changevars", config::ChangevarsConfig, |c| commands::changevars(c, seed))
        }
        Command::Peetre => with_section!("peetre", config::PeetreConfig, |c| commands::peetre(c, seed)),
        Command::Hardy => with_section!("hardy", config::HardyConfig, |c| commands::hardy(c, seed)),
        Command::Lambda { exponents } => commands::lambda(exponents)?,
        Command::Plan { point } => commands::plan(point)?,
        Command::Counterexample => {
            with_section!("counterexample", config::CounterexampleConfig, commands::counterexample)
        }
    };
    Ok((outcome, config))
}

fn run_inner(args: Vec<String>) -> Result<i32, CliError> {
    let (rest, overrides) = split_overrides(args);
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return Ok(code);
        }
    };
    let mut table = load(cli.config.as_deref())?;
    for (k, v) in &overrides {
        apply_override(&mut table, k, v)?;
    }
    let start = Instant::now();
    let (outcome, config) = execute(&cli.command, &table)?;
    let elapsed = start.elapsed().as_secs_f64();
    let seed = section::<RunConfig>(&table, "run")?.seed;
    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        arguments: cli.command.arguments(),
        grid: Default::default(),
        config,
        outputs: Vec::new(),
    };
    let written = write_outputs(&cli.out, manifest, &outcome, elapsed)?;
    for c in &outcome.report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        if c.relation.starts_with("in ") {
            println!("{status} {} = {} ({})", c.name, c.value, c.relation);
        } else {
            println!("{status} {} = {} ({} {})", c.name, c.value, c.relation, c.threshold);
        }
    }
    for n in &outcome.report.notes {
        println!("note: {n}");
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(if outcome.invalid {
        EXIT_CONFIG
    } else if outcome.passed() {
        EXIT_PASS
    } else {
        EXIT_CHECK_FAILED
    })
}

/// Full command line including the program name; returns the process exit code.
pub fn run(args: Vec<String>) -> i32 {
    match run_inner(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}
