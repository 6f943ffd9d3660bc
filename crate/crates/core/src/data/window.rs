use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::labels::{movement_label, volatility_label, LabelThresholds, MovementLabel};
use crate::data::FeatureFrame;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const LOG_EPSILON: f64 = 1e-8;

/// One training instance: a normalized `D x T` window and its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedSample {
    pub stock_id: String,
    pub target_date: NaiveDate,
    pub first_feature_date: NaiveDate,
    pub last_feature_date: NaiveDate,
    pub x: Matrix,
    pub y_m: MovementLabel,
    pub y_v: bool,
}

#[derive(Debug, Clone, Default)]
pub struct WindowOutcome {
    pub samples: Vec<WindowedSample>,
    pub warnings: Vec<String>,
}

/// `ln(e + epsilon)` elementwise. `columns` names the rows for error messages.
pub fn normalize(e: &Matrix, epsilon: f64, columns: &[String]) -> Result<Matrix> {
    if columns.len() != e.rows() {
        return Err(Error::dims("normalize", e.shape(), (columns.len(), e.cols())));
    }
    for i in 0..e.rows() {
        if let Some(&v) = e.row(i).iter().find(|&&v| v < 0.0 || v.is_nan()) {
            return Err(Error::Preprocessing {
                column: columns[i].clone(),
                value: v,
            });
        }
    }
    Ok(e.map(|v| (v + epsilon).ln()))
}

/// Slide a length-`window` lookback over `frame`.
///
/// Sample for target index `t` (with `window <= t < len`) sees days
/// `[t - window, t)` and is labeled from `adj_close[t-1] -> adj_close[t]`.
pub fn window(frame: &FeatureFrame, window: usize, thresholds: &LabelThresholds) -> Result<WindowOutcome> {
    if window == 0 {
        return Err(Error::Config("window length must be at least 1".into()));
    }
    thresholds.validate()?;
    let mut out = WindowOutcome::default();
    if frame.len() < window + 1 {
        out.warnings.push(format!(
            "{}: {} days is too short for window {window}, need at least {}",
            frame.stock_id,
            frame.len(),
            window + 1
        ));
        return Ok(out);
    }
    let d = frame.columns.len();
    for t in window..frame.len() {
        let raw = Matrix::from_fn(d, window, |i, j| frame.values.get(i, t - window + j));
        let x = normalize(&raw, LOG_EPSILON, &frame.columns)?;
        let (p_prev, p_t) = (frame.adj_close[t - 1], frame.adj_close[t]);
        out.samples.push(WindowedSample {
            stock_id: frame.stock_id.clone(),
            target_date: frame.dates[t],
            first_feature_date: frame.dates[t - window],
            last_feature_date: frame.dates[t - 1],
            x,
            y_m: movement_label(p_prev, p_t, thresholds.dead_zone)?,
            y_v: volatility_label(p_prev, p_t, thresholds.outlier)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Days;

    fn frame(prices: &[f64]) -> FeatureFrame {
        let start = NaiveDate::from_ymd_opt(2022, 1, 3).unwrap();
        let days = prices
            .iter()
            .enumerate()
            .map(|(i, &p)| (start + Days::new(i as u64), p, vec![i as f64, 0.5]))
            .collect();
        FeatureFrame::from_days("T", vec!["sent_score".into(), "tweet_count".into()], days).unwrap()
    }

    #[test]
    fn normalize_examples() {
        let cols = vec!["a".to_string()];
        let z = normalize(&Matrix::zeros(1, 1), 1e-8, &cols).unwrap();
        assert!((z.get(0, 0) - (-18.420680743952367)).abs() < 1e-12);
        let one = normalize(&Matrix::filled(1, 1, 1.0 - 1e-8), 1e-8, &cols).unwrap();
        assert!(one.get(0, 0).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_negative_with_column_name() {
        let cols = vec!["ok".to_string(), "bad".to_string()];
        let e = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]]).unwrap();
        match normalize(&e, 1e-8, &cols) {
            Err(Error::Preprocessing { column, value }) => {
                assert_eq!(column, "bad");
                assert_eq!(value, -1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sample_counts() {
        let th = LabelThresholds::default();
        assert_eq!(window(&frame(&[100.0; 11]), 10, &th).unwrap().samples.len(), 1);
        let short = window(&frame(&[100.0; 10]), 10, &th).unwrap();
        assert!(short.samples.is_empty());
        assert_eq!(short.warnings.len(), 1);
        assert_eq!(window(&frame(&[100.0; 25]), 10, &th).unwrap().samples.len(), 15);
    }

    #[test]
    fn features_strictly_precede_target() {
        let prices: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
        let out = window(&frame(&prices), 4, &LabelThresholds::default()).unwrap();
        for s in &out.samples {
            assert!(s.last_feature_date < s.target_date);
            assert!(s.first_feature_date <= s.last_feature_date);
            assert_eq!(s.x.shape(), (2, 4));
        }
        // first sample: target index 4, window rows hold day indices 0..4
        let first = &out.samples[0];
        assert!((first.x.get(0, 3) - (3.0f64 + 1e-8).ln()).abs() < 1e-15);
    }

    #[test]
    fn labels_match_hand_table() {
        // returns: +1%, +0.3%, -1%, -6%, ~+5.01%
        let prices = [100.0, 101.0, 101.303, 100.28997, 94.2725718, 99.0];
        let out = window(&frame(&prices), 1, &LabelThresholds::default()).unwrap();
        let got: Vec<(MovementLabel, bool)> = out.samples.iter().map(|s| (s.y_m, s.y_v)).collect();
        use MovementLabel::*;
        assert_eq!(got, vec![(Up, false), (Abstain, false), (Down, false), (Down, true), (Up, true)]);
    }
}
