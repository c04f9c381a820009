//! Run configuration: a flat `key = value` file, with command-line flags
//! applied on top.

use std::path::{Path, PathBuf};

use ini::Ini;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{IngestConfig, MassUnit};
use crate::metrics::CorrelationVariant;
use crate::report::AnalysisParams;

const KEYS: [&str; 10] = [
    "trade_path",
    "factors_path",
    "output_dir",
    "year_from",
    "year_to",
    "mass_unit",
    "seed",
    "resolution",
    "top_k",
    "correlation_variant",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub trade_path: PathBuf,
    pub factors_path: PathBuf,
    pub output_dir: PathBuf,
    pub year_from: i32,
    pub year_to: i32,
    pub mass_unit: MassUnit,
    pub seed: u64,
    pub resolution: f64,
    pub top_k: usize,
    pub correlation_variant: CorrelationVariant,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            trade_path: PathBuf::new(),
            factors_path: PathBuf::new(),
            output_dir: PathBuf::new(),
            year_from: 1986,
            year_to: 2022,
            mass_unit: MassUnit::Tonnes,
            seed: 42,
            resolution: 1.0,
            top_k: 5,
            correlation_variant: CorrelationVariant::RowRow,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

impl RunConfig {
    /// Reads a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::path(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        Self::from_ini_str(&text, base)
    }

    pub fn from_ini_str(text: &str, base_dir: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(section) = ini.sections().flatten().next() {
            return Err(Error::Config(format!(
                "sections are not supported (found [{section}])"
            )));
        }
        let mut config = RunConfig::default();
        let Some(props) = ini.section(None::<String>) else {
            return Ok(config);
        };
        for (key, value) in props.iter() {
            config.set(key, value, base_dir)?;
        }
        Ok(config)
    }

    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_relative() && !v.is_empty() {
                base_dir.join(p)
            } else {
                p
            }
        };
        match key {
            "trade_path" => self.trade_path = path(value),
            "factors_path" => self.factors_path = path(value),
            "output_dir" => self.output_dir = path(value),
            "year_from" => self.year_from = parse_value(key, value)?,
            "year_to" => self.year_to = parse_value(key, value)?,
            "mass_unit" => self.mass_unit = value.parse()?,
            "seed" => self.seed = parse_value(key, value)?,
            "resolution" => self.resolution = parse_value(key, value)?,
            "top_k" => self.top_k = parse_value(key, value)?,
            "correlation_variant" => self.correlation_variant = value.parse()?,
            other => {
                return Err(Error::Config(format!(
                    "unknown key `{other}` (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |p: &Path| p.as_os_str().is_empty();
        if empty(&self.trade_path) {
            return Err(Error::Config("trade_path is not set".into()));
        }
        if empty(&self.factors_path) {
            return Err(Error::Config("factors_path is not set".into()));
        }
        if self.year_from > self.year_to {
            return Err(Error::Config(format!(
                "year_from {} is after year_to {}",
                self.year_from, self.year_to
            )));
        }
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::Config(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.top_k == 0 {
            return Err(Error::Config("top_k must be at least 1".into()));
        }
        Ok(())
    }

    /// Output directory is only needed by commands that write files.
    pub fn validate_for_output(&self) -> Result<()> {
        self.validate()?;
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::Config("output_dir is not set".into()));
        }
        Ok(())
    }

    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            year_from: self.year_from,
            year_to: self.year_to,
            mass_unit: self.mass_unit,
        }
    }

    pub fn analysis(&self) -> AnalysisParams {
        AnalysisParams {
            seed: self.seed,
            resolution: self.resolution,
            correlation_variant: self.correlation_variant,
        }
    }
}
