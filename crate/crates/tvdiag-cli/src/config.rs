//! Run configuration: the TOML schema, flag overrides and validation.
//!
//! ```toml
//! version = 1
//! command = "sweep"            # sweep | sql | threshold | optimize-frequency | pulsed
//! scenario = "displacement"
//! conditioning = "meter"       # meter | meter+ancilla | meter+ancilla-uncorrelated
//!
//! [params]
//! kappa = 10.0
//! C = 1.0
//!
//! [bath]
//! n_m = 1.0
//! eta = 1.0
//!
//! [[sweep]]
//! param = "C"
//! lo = 1e-3
//! hi = 1e4
//! n = 200
//! scale = "log"
//!
//! [frequency]
//! optimize = true
//! lo = 0.01
//! hi = 10.0
//! n = 200
//!
//! [output]
//! path = "fig2.csv"
//! format = "csv"
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scenario::Scenario;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    #[default]
    Sweep,
    Sql,
    Threshold,
    OptimizeFrequency,
    Pulsed,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Sql => "sql",
            Command::Threshold => "threshold",
            Command::OptimizeFrequency => "optimize-frequency",
            Command::Pulsed => "pulsed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ConditioningSpec {
    #[default]
    #[serde(rename = "meter")]
    Meter,
    #[serde(rename = "meter+ancilla")]
    MeterAndAncilla,
    #[serde(rename = "meter+ancilla-uncorrelated")]
    MeterAndAncillaUncorrelated,
}

impl ConditioningSpec {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "meter" => Some(ConditioningSpec::Meter),
            "meter+ancilla" => Some(ConditioningSpec::MeterAndAncilla),
            "meter+ancilla-uncorrelated" => Some(ConditioningSpec::MeterAndAncillaUncorrelated),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default = "one")]
    pub n_m: f64,
    #[serde(default)]
    pub m_re: f64,
    #[serde(default)]
    pub m_im: f64,
    #[serde(default)]
    pub n_c: f64,
    #[serde(default = "one")]
    pub eta: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for BathConfig {
    fn default() -> Self {
        BathConfig { n_m: 1.0, m_re: 0.0, m_im: 0.0, n_c: 0.0, eta: 1.0 }
    }
}

pub const BATH_KEYS: [&str; 5] = ["n_m", "m_re", "m_im", "n_c", "eta"];

impl BathConfig {
    pub fn set(&mut self, key: &str, v: f64) -> bool {
        match key {
            "n_m" => self.n_m = v,
            "m_re" => self.m_re = v,
            "m_im" => self.m_im = v,
            "n_c" => self.n_c = v,
            "eta" => self.eta = v,
            _ => return false,
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub scale: Scale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    #[serde(default)]
    pub optimize: bool,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_points")]
    pub n: usize,
    #[serde(default)]
    pub scale: Scale,
}

fn default_points() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    #[default]
    Vc,
    TSum,
    SqlVc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "half")]
    pub level: f64,
    #[serde(default)]
    pub quantity: Quantity,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
}

fn half() -> f64 {
    0.5
}

fn default_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "schema_version")]
    pub version: u32,
    #[serde(default)]
    pub command: Command,
    pub scenario: Scenario,
    #[serde(default)]
    pub conditioning: ConditioningSpec,
    #[serde(default)]
    pub params: BTreeMap<String, toml::Value>,
    #[serde(default)]
    pub bath: BathConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<AxisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<FrequencyConfig>,
    /// Axis of the generalized-SQL minimization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sql: Option<AxisConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<ThresholdConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

impl RunConfig {
    pub fn new(scenario: Scenario) -> Self {
        RunConfig {
            version: SCHEMA_VERSION,
            command: Command::Sweep,
            scenario,
            conditioning: ConditioningSpec::Meter,
            params: BTreeMap::new(),
            bath: BathConfig::default(),
            sweep: Vec::new(),
            frequency: None,
            sql: None,
            threshold: None,
            output: OutputConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// TOML echo written into output headers; the output path is omitted.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn param_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(toml::Value::Float(v)) => Ok(Some(*v)),
            Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(_) => Err(CliError::Config(format!("params.{key}: expected a number"))),
        }
    }

    pub fn param_str(&self, key: &str) -> Result<Option<&str>, CliError> {
        match self.params.get(key) {
            None => Ok(None),
            Some(toml::Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(CliError::Config(format!("params.{key}: expected a string"))),
        }
    }

    /// Sets a parameter from `key=value` text; numbers stay numbers.
    pub fn set_param(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if key.is_empty() {
            return Err(CliError::Config("--set: empty key".into()));
        }
        if let Ok(v) = value.parse::<f64>() {
            if BATH_KEYS.contains(&key) {
                self.bath.set(key, v);
            } else {
                self.params.insert(key.to_string(), toml::Value::Float(v));
            }
        } else {
            if BATH_KEYS.contains(&key) {
                return Err(CliError::Config(format!("bath.{key}: expected a number")));
            }
            self.params.insert(key.to_string(), toml::Value::String(value.to_string()));
        }
        Ok(())
    }

    /// Structural checks that do not depend on the scenario's parameter set.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "version: unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.version
            )));
        }
        if self.sweep.len() > 2 {
            return Err(CliError::Config("sweep: at most two axes are supported".into()));
        }
        for (i, a) in self.sweep.iter().enumerate() {
            check_axis(a, &format!("sweep[{i}]"))?;
            if self.sweep[..i].iter().any(|b| b.param == a.param) {
                return Err(CliError::Config(format!("sweep[{i}].param: '{}' swept twice", a.param)));
            }
        }
        if let Some(f) = &self.frequency {
            if f.n < 2 {
                return Err(CliError::Config("frequency.n: needs at least two points".into()));
            }
            if !(f.lo.is_finite() && f.hi.is_finite() && f.lo < f.hi) {
                return Err(CliError::Config("frequency.lo: need finite lo < hi".into()));
            }
            if f.scale == Scale::Log && f.lo <= 0.0 {
                return Err(CliError::Config("frequency.lo: log scale needs lo > 0".into()));
            }
        }
        if let Some(s) = &self.sql {
            check_axis(s, "sql")?;
        }
        if let Some(t) = &self.threshold {
            if !(t.lo.is_finite() && t.hi.is_finite() && t.lo < t.hi) {
                return Err(CliError::Config("threshold.lo: need finite lo < hi".into()));
            }
            if !(t.rel_tol > 0.0) {
                return Err(CliError::Config("threshold.rel_tol: must be positive".into()));
            }
        }
        match self.command {
            Command::Sql if self.sql.is_none() => {
                return Err(CliError::Config("sql: the sql command needs an [sql] axis".into()))
            }
            Command::Threshold if self.threshold.is_none() => {
                return Err(CliError::Config("threshold: the threshold command needs a [threshold] table".into()))
            }
            Command::OptimizeFrequency if self.frequency.is_none() => {
                return Err(CliError::Config(
                    "frequency: optimize-frequency needs a [frequency] range".into(),
                ))
            }
            Command::Pulsed if self.scenario != Scenario::LevPulsed => {
                return Err(CliError::Config("scenario: the pulsed command needs scenario lev-pulsed".into()))
            }
            _ => {}
        }
        if let Some(t) = &self.threshold {
            if t.quantity == Quantity::SqlVc && self.sql.is_none() {
                return Err(CliError::Config("threshold.quantity: sql_vc needs an [sql] axis".into()));
            }
        }
        Ok(())
    }
}

fn check_axis(a: &AxisConfig, at: &str) -> Result<(), CliError> {
    if a.n < 1 {
        return Err(CliError::Config(format!("{at}.n: needs at least one point")));
    }
    if !(a.lo.is_finite() && a.hi.is_finite()) {
        return Err(CliError::Config(format!("{at}.lo: endpoints must be finite")));
    }
    if a.scale == Scale::Log && !(a.lo > 0.0 && a.hi > 0.0) {
        return Err(CliError::Config(format!("{at}.lo: log scale needs positive endpoints")));
    }
    Ok(())
}

impl AxisConfig {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        self.to_spec().points()
    }

    pub fn to_spec(&self) -> tvdiag::optimizer::SweepSpec {
        use tvdiag::optimizer::SweepSpec;
        match self.scale {
            Scale::Log => SweepSpec::log(&self.param, self.lo, self.hi, self.n),
            Scale::Linear => SweepSpec::linear(&self.param, self.lo, self.hi, self.n),
        }
    }
}

impl FrequencyConfig {
    pub fn to_spec(self) -> tvdiag::optimizer::SweepSpec {
        use tvdiag::optimizer::SweepSpec;
        match self.scale {
            Scale::Log => SweepSpec::log("omega", self.lo, self.hi, self.n),
            Scale::Linear => SweepSpec::linear("omega", self.lo, self.hi, self.n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::from_toml("scenario = \"cqnc\"\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");
        let e = RunConfig::from_toml("scenario = \"cqnc\"\n[bath]\nnm = 1\n").unwrap_err();
        assert!(e.to_string().contains("nm"), "{e}");
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::new(Scenario::Displacement);
        c.set_param("C", "0.1").unwrap();
        c.set_param("kappa", "10").unwrap();
        c.set_param("eta", "0.25").unwrap();
        c.sweep.push(AxisConfig { param: "C".into(), lo: 1e-3, hi: 1e4, n: 7, scale: Scale::Log });
        c.output.path = Some("x.csv".into());
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back.bath.eta, 0.25);
        assert_eq!(back.output.path, None);
        assert_eq!(RunConfig { output: c.output.clone(), ..back }, c);
    }

    #[test]
    fn command_requirements() {
        let mut c = RunConfig::new(Scenario::QndIdeal);
        c.command = Command::Sql;
        assert!(c.validate().unwrap_err().to_string().contains("sql"));
        c.command = Command::Pulsed;
        assert!(c.validate().unwrap_err().to_string().contains("scenario"));
    }
}
