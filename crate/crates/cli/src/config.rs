//! TOML configuration with `--section.key=value` overrides and typed sections.

use std::path::Path;

use logweight::exponents::{parse_rational, Q};
use logweight::field::Exponent;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

const SECTIONS: &[&str] = &["run", "partition", "growth", "changevars", "peetre", "hardy", "counterexample"];

/// Reads the config file (if any) and rejects sections nobody consumes.
pub fn load(path: Option<&Path>) -> Result<Table, CliError> {
    let table = match path {
        None => Table::new(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
            text.parse::<Table>().map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
    };
    check_sections(&table)?;
    Ok(table)
}

fn check_sections(table: &Table) -> Result<(), CliError> {
    for (k, v) in table {
        if !SECTIONS.contains(&k.as_str()) {
            return Err(CliError::Config(format!("unknown section [{k}]")));
        }
        if !v.is_table() {
            return Err(CliError::Config(format!("[{k}] must be a table")));
        }
    }
    Ok(())
}

/// Splits `--a.b=v` overrides from the rest of the command line.
pub fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for a in args {
        if let Some(body) = a.strip_prefix("--") {
            if let Some((key, value)) = body.split_once('=') {
                if key.contains('.') {
                    overrides.push((key.to_string(), value.to_string()));
                    continue;
                }
            }
        }
        rest.push(a);
    }
    (rest, overrides)
}

/// A bare word that is not valid TOML is taken as a string.
fn parse_value(text: &str) -> Value {
    match format!("v = {text}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(text.to_string()),
    }
}

pub fn apply_override(table: &mut Table, key: &str, value: &str) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed override key {key:?}")));
    }
    let (leaf, path) = parts.split_last().expect("non-empty");
    let mut node = &mut *table;
    for p in path {
        let entry = node.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key}: {p} is not a table")))?;
    }
    node.insert(leaf.to_string(), parse_value(value));
    check_sections(table)
}

pub fn section<T: DeserializeOwned>(table: &Table, name: &str) -> Result<T, CliError> {
    let body = table.get(name).cloned().unwrap_or_else(|| Value::Table(Table::new()));
    body.try_into().map_err(|e| CliError::Config(format!("[{name}] {e}")))
}

pub fn exponent(value: &Scalar) -> Result<Exponent, CliError> {
    let text = value.text();
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") {
        return Ok(Exponent::Infinite);
    }
    match t.parse::<f64>() {
        Ok(p) if p == f64::INFINITY => Ok(Exponent::Infinite),
        Ok(p) if p >= 1.0 => Ok(Exponent::Finite(p)),
        _ => Err(CliError::Config(format!("exponent {text:?} must be a number >= 1 or \"inf\""))),
    }
}

pub fn rational(value: &Scalar) -> Result<Q, CliError> {
    let text = value.text();
    parse_rational(&text).map_err(|e| CliError::Config(format!("{text:?}: {e}")))
}

/// A number or a string such as `"inf"` or `"1/4"`, as written in the config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Scalar {
    pub fn text(&self) -> String {
        match self {
            Scalar::Int(v) => v.to_string(),
            Scalar::Float(v) => v.to_string(),
            Scalar::Text(t) => t.clone(),
        }
    }
}

impl From<&str> for Scalar {
    fn from(t: &str) -> Self {
        Scalar::Text(t.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { seed: 11 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PartitionConfig {
    pub scale_min: i32,
    pub scale_max: i32,
    /// Frequencies `band_min <= |ξ| <= band_max` to audit.
    pub band_min: f64,
    pub band_max: f64,
    pub points_per_octave: usize,
    pub tolerance: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self { scale_min: -3, scale_max: 7, band_min: 0.25, band_max: 128.0, points_per_octave: 4096, tolerance: 1e-12 }
    }
}

/// Unset fields fall back to the preset for the chosen operator and `p`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub operator: String,
    pub p: Scalar,
    pub dimension: Option<usize>,
    pub samples: Option<usize>,
    pub period: Option<f64>,
    pub scale_min: Option<i32>,
    pub scale_max: Option<i32>,
    /// Ladder `|y| = 2^e` for `e = shift_min, shift_min + shift_step, …, shift_max`.
    pub shift_min: Option<i32>,
    pub shift_max: Option<i32>,
    pub shift_step: Option<i32>,
    pub random_fields: Option<usize>,
    pub random_band: Option<f64>,
    pub bump_radius: Option<f64>,
    pub tolerance: Option<f64>,
    /// Shifted square: the largest ratio may exceed the first ladder ratio by this factor.
    pub baseline_factor: f64,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            operator: "shifted-max".into(),
            p: Scalar::Int(2),
            dimension: None,
            samples: None,
            period: None,
            scale_min: None,
            scale_max: None,
            shift_min: None,
            shift_max: None,
            shift_step: None,
            random_fields: None,
            random_band: None,
            bump_radius: None,
            tolerance: None,
            baseline_factor: 3.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChangevarsConfig {
    pub cases: usize,
    /// Number of factors `m`, drawn uniformly per case.
    pub factors: Vec<usize>,
    pub dimension: usize,
    pub samples: usize,
    pub period: f64,
    pub band: f64,
    pub shift_bound: f64,
    pub scale_min: i32,
    pub scale_max: i32,
    pub p: Scalar,
    pub tolerance: f64,
    pub variant_p: Scalar,
    pub variant_tolerance: f64,
    pub shift_cases: usize,
    pub shift_samples: usize,
    pub shift_period: f64,
    pub shift_band: f64,
    pub shift_scale_min: i32,
    pub shift_scale_max: i32,
    pub shift_range: f64,
    /// Sample points per case compared against direct interpolation.
    pub shift_points: usize,
    pub shift_tolerance: f64,
}

impl Default for ChangevarsConfig {
    fn default() -> Self {
        Self {
            cases: 100,
            factors: vec![2, 3, 4],
            dimension: 1,
            samples: 1024,
            period: 16.0,
            band: 1.0,
            shift_bound: 20.0,
            scale_min: 0,
            scale_max: 2,
            p: Scalar::Int(2),
            tolerance: 1e-10,
            variant_p: Scalar::Int(3),
            variant_tolerance: 1e-9,
            shift_cases: 50,
            shift_samples: 2048,
            shift_period: 32.0,
            shift_band: 20.0,
            shift_scale_min: -2,
            shift_scale_max: 3,
            shift_range: 50.0,
            shift_points: 16,
            shift_tolerance: 1e-11,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeetreConfig {
    pub dimension: usize,
    pub samples: usize,
    pub period: f64,
    /// Cube side `2^{-k}` and band `|ξ| <= 2 A 2^k`.
    pub k: i32,
    pub band_factor: f64,
    /// Defaults to `d + 1, 2d, 4d`.
    pub sigmas: Option<Vec<f64>>,
    pub fields: usize,
    pub stability: f64,
    pub fs_scales: Vec<i32>,
    pub fs_p: Scalar,
    pub fs_q: Scalar,
}

impl Default for PeetreConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            samples: 256,
            period: 16.0,
            k: 0,
            band_factor: 1.0,
            sigmas: None,
            fields: 4,
            stability: 0.10,
            fs_scales: vec![-1, 0, 1],
            fs_p: Scalar::Int(2),
            fs_q: Scalar::Int(2),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HardyConfig {
    pub fields: usize,
    pub dimension: usize,
    pub samples: usize,
    pub period: f64,
    pub band_inner: f64,
    pub band_outer: f64,
    pub scale_min: i32,
    pub scale_max: i32,
    pub lower: f64,
    pub upper: f64,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            fields: 50,
            dimension: 1,
            samples: 2048,
            period: 16.0,
            band_inner: 0.25,
            band_outer: 32.0,
            scale_min: -3,
            scale_max: 5,
            lower: 0.70,
            upper: 1.01,
        }
    }
}

/// Unset fields fall back to the chosen mode's defaults. Rationals are strings (`"1/4"`).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleConfig {
    pub mode: String,
    pub counts: Option<Vec<usize>>,
    pub n: Option<usize>,
    pub s: Option<usize>,
    pub t: Option<usize>,
    pub dimension: Option<usize>,
    pub zeta_offset: Option<i32>,
    pub zeta_step: Option<i32>,
    pub eta_radius: Option<Scalar>,
    pub reciprocals: Option<Vec<Scalar>>,
    pub lambda_offsets: Option<Vec<Scalar>>,
    pub samples: Option<usize>,
    pub period: Option<u64>,
    pub quadrature_samples: Option<usize>,
    pub quadrature_window: Option<f64>,
    pub orthogonality_tolerance: f64,
    pub identity_tolerance: f64,
    pub slope_tolerance: f64,
    /// Bounds on `‖f_s‖_{p_s} / N^{1/p_s}`, checked when the bumps are separated.
    pub norm_constant_range: [f64; 2],
}

impl Default for CounterexampleConfig {
    fn default() -> Self {
        Self {
            mode: "identity".into(),
            counts: None,
            n: None,
            s: None,
            t: None,
            dimension: None,
            zeta_offset: None,
            zeta_step: None,
            eta_radius: None,
            reciprocals: None,
            lambda_offsets: None,
            samples: None,
            period: None,
            quadrature_samples: None,
            quadrature_window: None,
            orthogonality_tolerance: 1e-14,
            identity_tolerance: 1e-8,
            slope_tolerance: 0.3,
            norm_constant_range: [0.5, 2.0],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_are_typed_and_nested() {
        let (rest, ov) = split_overrides(
            ["growth", "--growth.p=inf", "--out=x", "--run.seed=5", "--counterexample.counts=[1, 2]"]
                .map(String::from)
                .to_vec(),
        );
        assert_eq!(rest, vec!["growth", "--out=x"]);
        let mut t = Table::new();
        for (k, v) in &ov {
            apply_override(&mut t, k, v).unwrap();
        }
        let g: GrowthConfig = section(&t, "growth").unwrap();
        assert_eq!(exponent(&g.p).unwrap(), Exponent::Infinite);
        assert_eq!(section::<RunConfig>(&t, "run").unwrap().seed, 5);
        let c: CounterexampleConfig = section(&t, "counterexample").unwrap();
        assert_eq!(c.counts, Some(vec![1, 2]));
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let mut t = Table::new();
        assert!(apply_override(&mut t, "nosuch.key", "1").is_err());
        let mut t = Table::new();
        apply_override(&mut t, "growth.typo", "1").unwrap();
        assert!(section::<GrowthConfig>(&t, "growth").is_err());
        assert!(apply_override(&mut t, "growth..x", "1").is_err());
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!(exponent(&"inf".into()).unwrap(), Exponent::Infinite);
        assert_eq!(exponent(&Scalar::Float(2.5)).unwrap(), Exponent::Finite(2.5));
        assert_eq!(exponent(&Scalar::Int(2)).unwrap(), Exponent::Finite(2.0));
        assert!(exponent(&Scalar::Float(0.5)).is_err());
        assert!(exponent(&"two".into()).is_err());
        assert_eq!(rational(&Scalar::Int(0)).unwrap(), Q::from_integer(0.into()));
    }
}
