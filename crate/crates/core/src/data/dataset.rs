use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::split::{chrono_split, DatasetSplit, SplitBoundaries};
use crate::data::window::{window, LOG_EPSILON};
use crate::data::{FeatureFrame, FeatureSchema, LabelThresholds, MovementLabel, WindowedSample};
use crate::error::{Error, Result};

pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Windowed, labeled and split samples, ready for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDataset {
    pub format_version: u32,
    pub schema: FeatureSchema,
    pub window: usize,
    pub thresholds: LabelThresholds,
    pub epsilon: f64,
    pub stocks: Vec<String>,
    pub split: DatasetSplit,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub samples: usize,
    pub up: usize,
    pub down: usize,
    pub abstain: usize,
    pub volatile: usize,
    pub abstain_rate: f64,
}

impl LabelCounts {
    pub fn of(samples: &[WindowedSample]) -> Self {
        let mut c = LabelCounts {
            samples: samples.len(),
            ..Default::default()
        };
        for s in samples {
            match s.y_m {
                MovementLabel::Up => c.up += 1,
                MovementLabel::Down => c.down += 1,
                MovementLabel::Abstain => c.abstain += 1,
            }
            c.volatile += usize::from(s.y_v);
        }
        c.abstain_rate = if c.samples > 0 {
            c.abstain as f64 / c.samples as f64
        } else {
            0.0
        };
        c
    }
}

/// JSON summary written next to a prepared dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub window: usize,
    pub thresholds: LabelThresholds,
    pub stocks: Vec<String>,
    pub total: LabelCounts,
    pub train: LabelCounts,
    pub validation: LabelCounts,
    pub test: LabelCounts,
    pub boundaries: SplitBoundaries,
    pub warnings: Vec<String>,
}

impl PreparedDataset {
    /// Window every frame (in stock-id order) and split chronologically.
    /// Frames too short for the window are skipped with a warning.
    pub fn build(
        frames: &[FeatureFrame],
        schema: &FeatureSchema,
        window_len: usize,
        thresholds: LabelThresholds,
        train_frac: f64,
        valid_frac: f64,
    ) -> Result<(Self, Vec<String>)> {
        if frames.is_empty() {
            return Err(Error::Config("no input frames".into()));
        }
        let mut order: Vec<&FeatureFrame> = frames.iter().collect();
        order.sort_by(|a, b| a.stock_id.cmp(&b.stock_id));
        if let Some(w) = order.windows(2).find(|w| w[0].stock_id == w[1].stock_id) {
            return Err(Error::Integrity(format!("stock '{}' appears twice", w[0].stock_id)));
        }
        let mut samples = Vec::new();
        let mut warnings = Vec::new();
        let mut stocks = Vec::new();
        for frame in order {
            if frame.columns != schema.names() {
                return Err(Error::Config(format!(
                    "{}: frame columns do not match the schema",
                    frame.stock_id
                )));
            }
            let out = window(frame, window_len, &thresholds)?;
            warnings.extend(out.warnings);
            if !out.samples.is_empty() {
                stocks.push(frame.stock_id.clone());
            }
            samples.extend(out.samples);
        }
        let split = chrono_split(samples, train_frac, valid_frac)?;
        Ok((
            Self {
                format_version: DATASET_FORMAT_VERSION,
                schema: schema.clone(),
                window: window_len,
                thresholds,
                epsilon: LOG_EPSILON,
                stocks,
                split,
            },
            warnings,
        ))
    }

    pub fn manifest(&self, warnings: Vec<String>) -> SplitManifest {
        let all: Vec<WindowedSample> = self
            .split
            .train
            .iter()
            .chain(&self.split.validation)
            .chain(&self.split.test)
            .cloned()
            .collect();
        SplitManifest {
            window: self.window,
            thresholds: self.thresholds,
            stocks: self.stocks.clone(),
            total: LabelCounts::of(&all),
            train: LabelCounts::of(&self.split.train),
            validation: LabelCounts::of(&self.split.validation),
            test: LabelCounts::of(&self.split.test),
            boundaries: self.split.boundaries.clone(),
            warnings,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ds: Self = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if ds.format_version != DATASET_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: dataset format version {} is not supported (expected {DATASET_FORMAT_VERSION})",
                path.display(),
                ds.format_version
            )));
        }
        Ok(ds)
    }
}
