//! Experiment configuration: a JSON file overlaid with `key=value` arguments.
//!
//! Values on the command line are read as JSON when possible. Otherwise
//! fractions such as `1/9` and bracketed lists such as `[1,1/9]` become
//! numbers, and anything else is taken as a string.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use laminar::simulate::{InitialProfile, SchrodingerConfig, TraceConfig};
use laminar::LaminarMedium;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Coefficients `a_1 … a_n`.
    pub a: Option<Vec<f64>>,
    /// Interfaces `x_1 < … < x_{n-1}`; unit widths from 0 when absent.
    pub interfaces: Option<Vec<f64>>,
    /// Medium JSON as written by `counterexample`.
    pub medium_file: Option<PathBuf>,

    pub degree_cap: u32,
    pub power_cap: usize,

    pub x: f64,
    pub r: u32,
    pub n_max: usize,

    pub alpha: f64,
    #[serde(rename = "N", alias = "target")]
    pub target: f64,
    pub width_scale: f64,
    pub n_start: usize,
    pub max_parts: usize,

    pub seed: u64,
    /// Layer count of the random medium used when none is given.
    pub layers: usize,
    pub frequencies: usize,
    pub frequency_min: f64,
    pub frequency_max: f64,

    pub source: Option<f64>,
    pub probes: Option<Vec<f64>>,
    pub t_max: f64,
    pub floor: f64,
    pub time_resolution: f64,
    pub event_budget: usize,

    pub dx: f64,
    pub dt: f64,
    pub t_final: f64,
    pub half_width: f64,
    pub sponge_width: f64,
    pub sponge_strength: f64,
    pub snapshot_every: usize,
    pub centre: f64,
    pub beta: f64,

    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let trace = TraceConfig::default();
        let sch = SchrodingerConfig::default();
        Self {
            a: None,
            interfaces: None,
            medium_file: None,
            degree_cap: 30,
            power_cap: laminar::partitions::DEFAULT_POWER_CAP,
            x: 1.0,
            r: 1,
            n_max: 20,
            alpha: FRAC_PI_2,
            target: 10.0,
            width_scale: 1.0,
            n_start: 5,
            max_parts: 400,
            seed: 7,
            layers: 4,
            frequencies: 20,
            frequency_min: 0.1,
            frequency_max: 20.0,
            source: None,
            probes: None,
            t_max: 50.0,
            floor: trace.floor,
            time_resolution: trace.time_resolution,
            event_budget: trace.event_budget,
            dx: sch.dx,
            dt: sch.dt,
            t_final: sch.t_final,
            half_width: sch.half_width,
            sponge_width: sch.sponge_width,
            sponge_strength: sch.sponge_strength,
            snapshot_every: sch.snapshot_every,
            centre: 0.0,
            beta: 0.1,
            out: None,
        }
    }
}

fn fraction(text: &str) -> Option<f64> {
    let (p, q) = text.split_once('/')?;
    let p: f64 = p.trim().parse().ok()?;
    let q: f64 = q.trim().parse().ok()?;
    Some(p / q)
}

fn number(value: f64) -> CliResult<Value> {
    Number::from_f64(value)
        .map(Value::Number)
        .ok_or_else(|| CliError::Config(format!("non-finite number {value}")))
}

/// Reads one command-line value.
pub fn parse_value(text: &str) -> CliResult<Value> {
    let text = text.trim();
    if let Ok(v) = serde_json::from_str::<Value>(text) {
        return Ok(v);
    }
    if let Some(v) = fraction(text) {
        return number(v);
    }
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let items = inner
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|item| {
                let item = item.trim();
                item.parse::<f64>()
                    .ok()
                    .or_else(|| fraction(item))
                    .ok_or_else(|| CliError::Config(format!("list entry {item:?} is not a number")))
                    .and_then(number)
            })
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(Value::Array(items));
    }
    Ok(Value::String(text.to_string()))
}

/// Builds the config from an optional JSON file and `key=value` overrides.
pub fn load(file: Option<&Path>, overrides: &[String], out: Option<PathBuf>) -> CliResult<ExperimentConfig> {
    let mut map = match file {
        None => Map::new(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
                Err(e) => return Err(CliError::Config(format!("{}: {e}", path.display()))),
            }
        }
    };
    for item in overrides {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value, got {item:?}")))?;
        map.insert(key.trim().to_string(), parse_value(value)?);
    }
    if let Some(out) = out {
        map.insert("out".into(), Value::String(out.display().to_string()));
    }
    let config: ExperimentConfig = serde_path_to_error::deserialize(Value::Object(map))
        .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))?;
    Ok(config)
}

impl ExperimentConfig {
    /// The configured medium, if any.
    pub fn medium(&self) -> CliResult<Option<LaminarMedium>> {
        if let Some(path) = &self.medium_file {
            if self.a.is_some() {
                return Err(CliError::Config("give either `a` or `medium_file`, not both".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            return Ok(Some(LaminarMedium::from_json(&text)?));
        }
        let Some(a) = &self.a else {
            return Ok(None);
        };
        let interfaces = match &self.interfaces {
            Some(x) => x.clone(),
            None => (0..a.len().saturating_sub(1)).map(|i| i as f64).collect(),
        };
        Ok(Some(LaminarMedium::new(a.clone(), interfaces)?))
    }

    pub fn require_medium(&self) -> CliResult<LaminarMedium> {
        self.medium()?
            .ok_or_else(|| CliError::Config("a medium is required: set `a` or `medium_file`".into()))
    }

    pub fn trace(&self) -> TraceConfig {
        TraceConfig {
            t_max: self.t_max,
            floor: self.floor,
            time_resolution: self.time_resolution,
            event_budget: self.event_budget,
            keep_events: true,
        }
    }

    pub fn schrodinger(&self) -> SchrodingerConfig {
        SchrodingerConfig {
            dx: self.dx,
            dt: self.dt,
            t_final: self.t_final,
            half_width: self.half_width,
            sponge_width: self.sponge_width,
            sponge_strength: self.sponge_strength,
            snapshot_every: self.snapshot_every,
            keep_fields: false,
        }
    }

    pub fn initial_profile(&self) -> InitialProfile {
        InitialProfile::gaussian(self.centre, self.beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(parse_value("3").unwrap(), Value::from(3));
        assert_eq!(parse_value("[1, 2.5]").unwrap(), serde_json::json!([1, 2.5]));
        assert_eq!(parse_value("[1,1/4]").unwrap(), serde_json::json!([1.0, 0.25]));
        assert_eq!(parse_value("1/8").unwrap(), serde_json::json!(0.125));
        assert_eq!(parse_value("out/dir").unwrap(), Value::String("out/dir".into()));
    }

    #[test]
    fn overrides_and_aliases() {
        let c = load(None, &["alpha=1.6".into(), "N=12".into(), "a=[1,1/9]".into()], None).unwrap();
        assert_eq!(c.alpha, 1.6);
        assert_eq!(c.target, 12.0);
        let m = c.require_medium().unwrap();
        assert_eq!(m.interfaces(), &[0.0]);
    }

    #[test]
    fn schema_errors_carry_the_path() {
        let err = load(None, &["degree_cap=-3".into()], None).unwrap_err();
        assert!(err.to_string().contains("degree_cap"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = load(None, &["bogus=1".into()], None).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }
}
