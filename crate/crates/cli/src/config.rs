use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioName {
    /// Blackbody pixels behind a lossy link (defaults: 9 pixels, 247.56 K among 272.76 K, tau 0.99).
    Imaging,
    /// Lossy lines with excess noise; needs --tau, --excess-t, --excess-b and --m.
    Eavesdropper,
    /// Additive-noise channels; needs --nu-t, --nu-b and --m.
    Additive,
    /// Explicit channels; needs --tau, --m and either --eps-t/--eps-b or --nu-t/--nu-b.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelClass {
    Loss,
    Amplifier,
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Quantum,
    Classical,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Every parameter any command reads. Values come from `--config` and are
/// overridden by flags; commands fill in defaults so the echoed copy is complete.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// JSON file with parameter values; flags take precedence.
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioName>,
    /// Number of channel positions.
    #[arg(long)]
    pub m: Option<usize>,
    /// Probes per channel: `20`, `1..60` (inclusive), `1..2000:5`, or `1,10,100`.
    #[arg(long = "probes", visible_alias = "M", value_name = "RANGE")]
    pub probes: Option<String>,
    /// Transmissivity (< 1 loss, > 1 amplifier, = 1 additive).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Channel class for custom scenarios; inferred from --tau when absent.
    #[arg(long, value_enum)]
    pub channel: Option<ChannelClass>,
    #[arg(long)]
    pub eps_t: Option<f64>,
    #[arg(long)]
    pub eps_b: Option<f64>,
    #[arg(long)]
    pub nu_t: Option<f64>,
    #[arg(long)]
    pub nu_b: Option<f64>,
    #[arg(long)]
    pub excess_t: Option<f64>,
    #[arg(long)]
    pub excess_b: Option<f64>,
    /// Target pixel temperature, K.
    #[arg(long)]
    pub temp_t: Option<f64>,
    /// Background pixel temperature, K.
    #[arg(long)]
    pub temp_b: Option<f64>,
    /// Pixel area, m^2.
    #[arg(long)]
    pub area: Option<f64>,
    /// Collection solid angle, sr.
    #[arg(long)]
    pub solid_angle: Option<f64>,
    /// Pulse duration, s.
    #[arg(long)]
    pub pulse_duration: Option<f64>,
    /// Carrier wavelength, m.
    #[arg(long)]
    pub wavelength: Option<f64>,
    /// Detection bandwidth, Hz.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Two-mode squeezing parameter for finite-energy fidelities.
    #[arg(long)]
    pub a: Option<f64>,
    /// Mean photons per probe of the target return (bypasses scenario building).
    #[arg(long)]
    pub nbar_t: Option<f64>,
    #[arg(long)]
    pub nbar_b: Option<f64>,
    #[arg(long, value_enum)]
    pub protocol: Option<Protocol>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Grid points per axis for region scans.
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub eps_dif_max: Option<f64>,
    #[arg(long)]
    pub eps_av_max: Option<f64>,
    #[arg(long)]
    pub quadrature_tol: Option<f64>,
    #[arg(long)]
    pub mle_mass_tol: Option<f64>,
    #[arg(long)]
    pub mle_term_tol: Option<f64>,
    #[arg(long)]
    pub mle_patience: Option<u32>,
    /// Largest probe count tried when searching for the MLE crossing.
    #[arg(long)]
    pub mle_search_limit: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent unless ENVLOC_OUTPUT_DIR is set.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn strip_nulls(v: Value) -> serde_json::Map<String, Value> {
    match v {
        Value::Object(map) => map.into_iter().filter(|(_, v)| !v.is_null()).collect(),
        _ => serde_json::Map::new(),
    }
}

impl Params {
    /// Loads `--config` (if any) and overlays the flags on top of it.
    pub fn resolve(flags: Params) -> Result<Params, CliError> {
        let Some(path) = flags.config.clone() else {
            return Ok(flags);
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let file: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("config {} is not valid JSON: {e}", path.display())))?;
        if !file.is_object() {
            return Err(CliError::Usage(format!("config {} must hold a JSON object", path.display())));
        }
        let mut merged = strip_nulls(file);
        merged.extend(strip_nulls(serde_json::to_value(&flags).expect("params serialize")));
        let mut params: Params = serde_json::from_value(Value::Object(merged))
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        params.config = Some(path);
        Ok(params)
    }

    /// The resolved parameters with unset entries dropped; valid input for `--config`.
    pub fn echo(&self) -> Value {
        Value::Object(strip_nulls(serde_json::to_value(self).expect("params serialize")))
    }

    pub fn require<T: Copy>(value: Option<T>, flag: &str, context: &str) -> Result<T, CliError> {
        value.ok_or_else(|| CliError::Usage(format!("--{flag} is required {context}")))
    }

    /// Output destination, with `ENVLOC_OUTPUT_DIR` supplying a default directory.
    pub fn destination(&mut self, command: &str) -> Option<PathBuf> {
        if self.output.is_none() {
            if let Some(dir) = std::env::var_os("ENVLOC_OUTPUT_DIR") {
                let ext = match self.format.unwrap_or(Format::Csv) {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                self.output = Some(Path::new(&dir).join(format!("{command}.{ext}")));
            }
        }
        self.output.clone()
    }
}

/// Parses `20`, `a..b`, `a..b:step` or `a,b,c` into a strictly increasing list.
pub fn parse_probe_range(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = |why: &str| CliError::Usage(format!("invalid probe range {spec:?}: {why}"));
    let int = |s: &str| s.trim().parse::<u64>().map_err(|_| bad("expected non-negative integers"));
    let values: Vec<u64> = if let Some((lo, rest)) = spec.split_once("..") {
        let (hi, step) = match rest.split_once(':') {
            Some((hi, step)) => (int(hi)?, int(step)?),
            None => (int(rest)?, 1),
        };
        if step == 0 {
            return Err(bad("step must be positive"));
        }
        (int(lo)?..=hi).step_by(step as usize).collect()
    } else {
        spec.split(',').map(int).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(bad("range is empty"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("values must be strictly increasing"));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_ranges() {
        assert_eq!(parse_probe_range("20").unwrap(), vec![20]);
        assert_eq!(parse_probe_range("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_probe_range("0..10:5").unwrap(), vec![0, 5, 10]);
        assert_eq!(parse_probe_range("1, 10,100").unwrap(), vec![1, 10, 100]);
        assert!(parse_probe_range("5..1").is_err());
        assert!(parse_probe_range("").is_err());
        assert!(parse_probe_range("3,2").is_err());
        assert!(parse_probe_range("1..9:0").is_err());
    }
}
