//! Run configuration: a sectioned TOML file plus `--section.key=value`
//! overrides, validated before anything is computed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sitesplit::{HoppingVariant, SpectralBath, TdvpConfig};

use crate::CliError;

/// Environment variable that replaces `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "SITESPLIT_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    One(f64),
    Many(Vec<f64>),
}

impl AlphaSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::One(a) => vec![*a],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathConfig {
    pub s: f64,
    pub alpha: AlphaSpec,
    pub omega_c: f64,
}

impl Default for BathConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            alpha: AlphaSpec::One(0.2),
            omega_c: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub delta: f64,
    pub d_b: usize,
    /// Number of bosonic chain sites `L`.
    pub chain_length: usize,
    pub tn_variant: HoppingVariant,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            d_b: 100,
            chain_length: 100,
            tn_variant: HoppingVariant::Paper,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    pub enabled: bool,
    pub threshold: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            threshold: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("output"),
            prefix: "run".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub d_b_list: Vec<usize>,
    pub chain_length: usize,
    /// Timed sweeps per point; the per-sweep time is their mean.
    pub sweeps: usize,
    /// Budget per unsplit point in seconds; slower points count as timeouts.
    pub timeout_s: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            d_b_list: vec![16, 36, 64, 100, 144],
            chain_length: 20,
            sweeps: 2,
            timeout_s: 600.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub seed: u64,
    /// Worker threads for alpha sweeps; 0 means one per available core.
    pub jobs: usize,
    pub bath: BathConfig,
    pub system: SystemConfig,
    pub tdvp: TdvpConfig,
    pub split: SplitConfig,
    pub output: OutputConfig,
    pub benchmark: BenchmarkConfig,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Apply one `section.key=value` (or top-level `key=value`) override.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{spec}` is not key=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    let (last, sections) = keys.split_last().expect("split yields one item");
    let mut cursor = table;
    for section in sections {
        let entry = cursor
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{section}` is not a section")))?;
    }
    cursor.insert(last.to_string(), parse_value(raw));
    Ok(())
}

impl SimConfig {
    /// Parse TOML text and apply overrides of the form `section.key=value`.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: SimConfig = table
            .try_into()
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut cfg = Self::from_toml_with_overrides(&text, overrides)?;
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.output.dir = PathBuf::from(dir);
            }
        }
        Ok(cfg)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.bath.alpha.values()
    }

    pub fn bath_for(&self, alpha: f64) -> Result<SpectralBath, CliError> {
        SpectralBath::new(self.bath.s, alpha, self.bath.omega_c).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let alphas = self.alphas();
        if alphas.is_empty() {
            return Err(CliError::Config("bath.alpha is empty".into()));
        }
        for &a in &alphas {
            self.bath_for(a)?;
        }
        let s = &self.system;
        if !s.delta.is_finite() {
            return Err(CliError::Config("system.delta must be finite".into()));
        }
        if s.d_b < 2 {
            return Err(CliError::Config(format!("system.d_b must be at least 2, got {}", s.d_b)));
        }
        if s.chain_length < 1 {
            return Err(CliError::Config("system.chain_length must be at least 1".into()));
        }
        if !(self.split.threshold >= 0.0 && self.split.threshold < 1.0) {
            return Err(CliError::Config(format!(
                "split.threshold must lie in [0, 1), got {}",
                self.split.threshold
            )));
        }
        self.tdvp.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.benchmark.sweeps < 1 || !(self.benchmark.timeout_s > 0.0) {
            return Err(CliError::Config("benchmark needs sweeps >= 1 and a positive timeout".into()));
        }
        if self.benchmark.d_b_list.iter().any(|&d| d < 2) {
            return Err(CliError::Config("benchmark.d_b_list entries must be at least 2".into()));
        }
        Ok(())
    }

    /// The resolved config as TOML, for embedding in outputs.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Resolved config as `# `-free preamble lines.
    pub fn preamble(&self) -> Vec<String> {
        let mut lines = vec![format!("sitesplit {}", env!("CARGO_PKG_VERSION"))];
        lines.extend(self.to_toml().lines().map(str::to_string));
        lines
    }

    /// The same config restricted to one coupling.
    pub fn with_alpha(&self, alpha: f64) -> Self {
        let mut c = self.clone();
        c.bath.alpha = AlphaSpec::One(alpha);
        c
    }

    pub fn output_dir(&self) -> &Path {
        &self.output.dir
    }
}
