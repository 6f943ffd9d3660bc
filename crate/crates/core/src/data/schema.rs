use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source family of a feature column; drives the ablation modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    /// Prices and anything derived from them.
    Price,
    /// Tweet sentiment scores and tweet counts.
    Sentiment,
    /// Macroeconomic indicators.
    Macro,
    /// Search-engine trend indices.
    Trend,
    Other,
}

impl FeatureGroup {
    /// Guess a group from a column name prefix. `adj_close` is a price column.
    pub fn infer(name: &str) -> Self {
        let lower = name.to_ascii_lowercase();
        if lower == "adj_close" || lower.starts_with("price") || lower.starts_with("close") {
            FeatureGroup::Price
        } else if lower.starts_with("sent") || lower.starts_with("tweet") {
            FeatureGroup::Sentiment
        } else if lower.starts_with("macro") {
            FeatureGroup::Macro
        } else if lower.starts_with("trend") {
            FeatureGroup::Trend
        } else {
            FeatureGroup::Other
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub group: FeatureGroup,
}

/// Ordered list of feature columns read from each per-stock CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<FeatureColumn>,
}

impl FeatureSchema {
    pub fn new(columns: Vec<FeatureColumn>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::Config("feature schema has no columns".into()));
        }
        for (i, c) in columns.iter().enumerate() {
            if c.name == "date" {
                return Err(Error::Config("'date' cannot be a feature column".into()));
            }
            if columns[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::Config(format!("duplicate feature column '{}'", c.name)));
            }
        }
        Ok(Self { columns })
    }

    /// Schema with groups inferred from column names.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .map(|n| FeatureColumn {
                    name: n.as_ref().to_string(),
                    group: FeatureGroup::infer(n.as_ref()),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// Row indices kept under `mode`, in schema order.
    pub fn mask(&self, mode: AblationMode) -> Result<FeatureMask> {
        let indices: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| mode.keeps(c.group))
            .map(|(i, _)| i)
            .collect();
        if indices.is_empty() {
            return Err(Error::Config(format!(
                "ablation mode {mode} selects no columns from schema [{}]",
                self.names().join(", ")
            )));
        }
        Ok(FeatureMask { indices })
    }

    /// Row indices of the named columns, failing on any name this schema lacks.
    pub fn mask_for_names(&self, names: &[String]) -> Result<FeatureMask> {
        let mut indices = Vec::with_capacity(names.len());
        let mut missing = Vec::new();
        for n in names {
            match self.columns.iter().position(|c| &c.name == n) {
                Some(i) => indices.push(i),
                None => missing.push(n.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "dataset schema lacks columns [{}]",
                missing.join(", ")
            )));
        }
        Ok(FeatureMask { indices })
    }
}

/// Which feature groups a model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    /// Every column.
    #[default]
    Full,
    /// Price columns only.
    P,
    /// Sentiment columns only.
    S,
    /// Everything except macroeconomic columns.
    WoM,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [AblationMode::Full, AblationMode::P, AblationMode::S, AblationMode::WoM];

    pub fn keeps(self, group: FeatureGroup) -> bool {
        match self {
            AblationMode::Full => true,
            AblationMode::P => group == FeatureGroup::Price,
            AblationMode::S => group == FeatureGroup::Sentiment,
            AblationMode::WoM => group != FeatureGroup::Macro,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AblationMode::Full => "ALERTA-Net",
            AblationMode::P => "ALERTA-Net(P)",
            AblationMode::S => "ALERTA-Net(S)",
            AblationMode::WoM => "ALERTA-Net(W/O M)",
        }
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::Full => "full",
            AblationMode::P => "p",
            AblationMode::S => "s",
            AblationMode::WoM => "wo-m",
        })
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(AblationMode::Full),
            "p" => Ok(AblationMode::P),
            "s" => Ok(AblationMode::S),
            "wo-m" | "wo_m" | "wom" => Ok(AblationMode::WoM),
            other => Err(Error::Config(format!("unknown ablation mode '{other}'"))),
        }
    }
}

/// Selected feature rows. Masked rows are removed, never zeroed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMask {
    pub indices: Vec<usize>,
}

impl FeatureMask {
    pub fn all(d: usize) -> Self {
        Self {
            indices: (0..d).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}
