use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Next-day direction. `Abstain` marks moves inside the dead zone; those
/// samples are left out of the movement loss and movement metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MovementLabel {
    Down,
    Up,
    Abstain,
}

impl MovementLabel {
    /// `Some(1.0)` for up, `Some(0.0)` for down, `None` when abstaining.
    pub fn target(self) -> Option<f64> {
        match self {
            MovementLabel::Down => Some(0.0),
            MovementLabel::Up => Some(1.0),
            MovementLabel::Abstain => None,
        }
    }

    pub fn is_abstain(self) -> bool {
        self == MovementLabel::Abstain
    }
}

/// Labeling thresholds as fractions of the previous price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    /// Open interval `(lower, upper)` of returns that abstain.
    pub dead_zone: (f64, f64),
    /// `|return| >= outlier` flags a volatility event.
    pub outlier: f64,
}

impl Default for LabelThresholds {
    fn default() -> Self {
        Self {
            dead_zone: (-0.005, 0.005),
            outlier: 0.05,
        }
    }
}

impl LabelThresholds {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.dead_zone;
        if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && 0.0 <= hi) {
            return Err(Error::Config(format!("dead zone ({lo}, {hi}) must straddle zero")));
        }
        if !(self.outlier.is_finite() && self.outlier > 0.0) {
            return Err(Error::Config(format!("outlier threshold {} must be positive", self.outlier)));
        }
        Ok(())
    }
}

pub fn relative_change(p_prev: f64, p_t: f64) -> Result<f64> {
    if !(p_prev > 0.0) {
        return Err(Error::Domain(format!("previous price must be positive, got {p_prev}")));
    }
    Ok((p_t - p_prev) / p_prev)
}

/// Up if the return is at or above the upper dead-zone edge, down at or below
/// the lower edge, abstain strictly inside.
pub fn movement_label(p_prev: f64, p_t: f64, dead_zone: (f64, f64)) -> Result<MovementLabel> {
    let r = relative_change(p_prev, p_t)?;
    let (lo, hi) = dead_zone;
    Ok(if r >= hi {
        MovementLabel::Up
    } else if r <= lo {
        MovementLabel::Down
    } else {
        MovementLabel::Abstain
    })
}

/// `true` iff `|return| >= outlier_threshold`.
pub fn volatility_label(p_prev: f64, p_t: f64, outlier_threshold: f64) -> Result<bool> {
    Ok(relative_change(p_prev, p_t)?.abs() >= outlier_threshold)
}
