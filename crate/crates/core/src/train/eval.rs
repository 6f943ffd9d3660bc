use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, WindowedSample};
use crate::error::{Error, Result};
use crate::metrics::{TaskMetrics, MCC_ZERO_DENOMINATOR_CONVENTION};
use crate::model::AlertaNet;
use crate::numerics::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub threshold: f64,
    /// `None` when every sample abstained.
    pub movement: Option<TaskMetrics>,
    pub movement_abstained: usize,
    pub volatility: TaskMetrics,
    pub mcc_convention: String,
    pub manifest: Option<String>,
}

/// Score `samples` (full-schema windows) and compute per-task metrics.
pub fn evaluate(net: &AlertaNet, schema: &FeatureSchema, samples: &[WindowedSample], threshold: f64) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Config("no samples to evaluate".into()));
    }
    let mask = schema.mask_for_names(&net.config.feature_names).map_err(|e| {
        Error::Config(format!("checkpoint ({}) does not fit this dataset: {e}", net.config.describe()))
    })?;
    let x: Vec<Matrix> = samples
        .iter()
        .map(|s| s.x.select_rows(&mask.indices))
        .collect::<Result<_>>()?;
    let refs: Vec<&Matrix> = x.iter().collect();
    let probs = net.predict(&refs, 256).map_err(|e| match e {
        Error::Dimension { .. } => Error::Config(format!(
            "checkpoint ({}) does not fit this dataset: {e}",
            net.config.describe()
        )),
        other => other,
    })?;

    let mut m_scores = Vec::new();
    let mut m_labels = Vec::new();
    for (s, &(pm, _)) in samples.iter().zip(&probs) {
        if let Some(t) = s.y_m.target() {
            m_scores.push(pm);
            m_labels.push(t == 1.0);
        }
    }
    let movement = if m_scores.is_empty() {
        None
    } else {
        Some(TaskMetrics::compute(&m_scores, &m_labels, threshold)?)
    };
    let v_scores: Vec<f64> = probs.iter().map(|p| p.1).collect();
    let v_labels: Vec<bool> = samples.iter().map(|s| s.y_v).collect();
    Ok(EvalReport {
        model: net.config.describe(),
        threshold,
        movement,
        movement_abstained: samples.len() - m_scores.len(),
        volatility: TaskMetrics::compute(&v_scores, &v_labels, threshold)?,
        mcc_convention: MCC_ZERO_DENOMINATOR_CONVENTION.into(),
        manifest: None,
    })
}
