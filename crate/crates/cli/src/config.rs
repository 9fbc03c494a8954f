//! Optional TOML configuration and flag/config/default resolution.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use serde::Deserialize;

use crate::CliError;

/// Either an integer or a word such as `auto`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Flex {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Flex {
    pub fn text(&self) -> String {
        match self {
            Self::Int(v) => v.to_string(),
            Self::Float(v) => v.to_string(),
            Self::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeriesSection {
    pub input: Option<String>,
    pub time_column: Option<String>,
    pub columns: Option<Vec<String>>,
    pub dt: Option<f64>,
    pub rescale: Option<Flex>,
    pub normalize: Option<Vec<String>>,
    pub adjust: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub model: Option<String>,
    pub degree: Option<Flex>,
    pub degrees: Option<Flex>,
    pub basis: Option<String>,
    pub ridge: Option<f64>,
    pub h: Option<f64>,
    pub test_len: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarSection {
    pub lag: Option<Flex>,
    pub lags: Option<Flex>,
    pub intercept: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub model: Option<String>,
    pub baseline: Option<String>,
    pub test_len: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitSection {
    #[serde(rename = "box")]
    pub bounds: Option<Vec<f64>>,
    pub box_factor: Option<f64>,
    pub grid: Option<usize>,
    pub trajectories: Option<usize>,
    pub trending_grid: Option<usize>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrendingSection {
    #[serde(rename = "box")]
    pub bounds: Option<Vec<f64>>,
    pub box_factor: Option<f64>,
    pub grid: Option<usize>,
    pub interior: Option<bool>,
    pub horizon: Option<f64>,
    pub h: Option<f64>,
    pub escape_factor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub steps: Option<usize>,
    pub dt: Option<f64>,
    pub h: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub series: SeriesSection,
    pub fit: FitSection,
    pub var: VarSection,
    pub evaluate: EvaluateSection,
    pub portrait: PortraitSection,
    pub trending: TrendingSection,
    pub predict: PredictSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().to_string();
            CliError::Usage(format!("malformed config file {}: {msg}", path.display()))
        })
    }
}

/// Records every resolved setting so it can be echoed into outputs.
#[derive(Debug, Default, Clone)]
pub struct Effective {
    entries: BTreeMap<String, String>,
}

impl Effective {
    /// First of flag, config value, default; the winner is recorded.
    pub fn pick<T: Display>(&mut self, key: &str, flag: Option<T>, config: Option<T>, default: T) -> T {
        let v = flag.or(config).unwrap_or(default);
        self.entries.insert(key.to_string(), v.to_string());
        v
    }

    /// Like [`pick`](Self::pick) without a default; absent values are not recorded.
    pub fn pick_opt<T: Display>(&mut self, key: &str, flag: Option<T>, config: Option<T>) -> Option<T> {
        let v = flag.or(config);
        if let Some(v) = &v {
            self.entries.insert(key.to_string(), v.to_string());
        }
        v
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    /// Entries under the `config.` prefix used in provenance blocks.
    pub fn provenance(&self) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(k, v)| (format!("config.{k}"), v.clone()))
            .collect()
    }
}

/// Joins list settings for the effective-config record.
pub fn join(items: &[String]) -> String {
    items.join(",")
}
