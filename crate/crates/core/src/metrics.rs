//! Accuracy, Matthews correlation coefficient and ROC AUC for binary tasks.
//!
//! MCC follows the common convention of returning 0 when any marginal count
//! is zero. AUC is the exact Mann-Whitney statistic (ties count one half),
//! computed from average ranks.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MCC_ZERO_DENOMINATOR_CONVENTION: &str = "mcc = 0 when any of tp+fp, tp+fn, tn+fp, tn+fn is 0";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Scores at or above `threshold` predict the positive class.
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self> {
        check_inputs(scores, labels)?;
        let mut c = Self::default();
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= threshold, y) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::dims("metrics", (scores.len(), 1), (labels.len(), 1)));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("score is NaN".into()));
    }
    Ok(())
}

pub fn accuracy(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::UndefinedMetric("accuracy of zero samples"));
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

pub fn mcc(c: &ConfusionCounts) -> f64 {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if den == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / den.sqrt()
}

/// Probability that a random positive outscores a random negative.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric("AUC needs both classes"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));

    // doubled ranks keep tie averages integral
    let mut pos_rank_sum2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank2 = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            if labels[k] {
                pos_rank_sum2 += avg_rank2;
            }
        }
        i = j + 1;
    }
    let n_pos = n_pos as u64;
    let u2 = pos_rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg as u64) as f64)
}

/// Metrics for one task at a fixed decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub samples: usize,
    pub accuracy: f64,
    pub mcc: f64,
    /// `None` when the labels hold a single class.
    pub auc: Option<f64>,
    pub confusion: ConfusionCounts,
}

impl TaskMetrics {
    pub fn compute(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self> {
        let confusion = ConfusionCounts::from_scores(scores, labels, threshold)?;
        let auc = match auc(scores, labels) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            samples: scores.len(),
            accuracy: accuracy(&confusion)?,
            mcc: mcc(&confusion),
            auc,
            confusion,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionCounts {
        ConfusionCounts { tp, tn, fp, fn_ }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&counts(5, 5, 0, 0)).unwrap(), 1.0);
        assert_eq!(accuracy(&counts(1, 1, 1, 1)).unwrap(), 0.5);
        assert!(matches!(accuracy(&counts(0, 0, 0, 0)), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn mcc_examples() {
        assert_eq!(mcc(&counts(4, 6, 0, 0)), 1.0);
        assert_eq!(mcc(&counts(0, 0, 4, 6)), -1.0);
        // predicting positive for everything leaves tn + fn = 0
        let c = ConfusionCounts::from_scores(&[0.9, 0.8, 0.7], &[true, false, true], 0.5).unwrap();
        assert_eq!(mcc(&c), 0.0);
        // 7000 / sqrt(110 * 100 * 90 * 100)
        assert!((mcc(&counts(90, 80, 20, 10)) - 0.70352647068144).abs() < 1e-13);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.9, 0.1], &[true, false]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.9], &[true, false]).unwrap(), 0.0);
        assert_eq!(auc(&[0.3; 6], &[true, false, true, false, false, true]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.2, 0.4], &[true, true]), Err(Error::UndefinedMetric(_))));
        assert!(auc(&[f64::NAN, 0.4], &[true, false]).is_err());
    }

    #[test]
    fn threshold_is_inclusive() {
        let c = ConfusionCounts::from_scores(&[0.5, 0.49], &[true, false], 0.5).unwrap();
        assert_eq!(c, counts(1, 1, 0, 0));
    }
}
