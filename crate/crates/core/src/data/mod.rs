//! CSV ingestion, log normalization, windowing, labeling and chronological splits.

mod dataset;
mod frame;
mod labels;
mod schema;
mod split;
mod window;

pub use dataset::{LabelCounts, PreparedDataset, SplitManifest, DATASET_FORMAT_VERSION};
pub use frame::{load_frame, read_feature_names, write_frame, FeatureFrame, DATE_COLUMN, PRICE_COLUMN};
pub use labels::{movement_label, relative_change, volatility_label, LabelThresholds, MovementLabel};
pub use schema::{AblationMode, FeatureColumn, FeatureGroup, FeatureMask, FeatureSchema};
pub use split::{chrono_split, DatasetSplit, DateRange, SplitBoundaries};
pub use window::{normalize, window, WindowOutcome, WindowedSample, LOG_EPSILON};
