use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::WindowedSample;
use crate::error::{Error, Result};

/// First and last target date covered by a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub first: NaiveDate,
    pub last: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBoundaries {
    pub train: DateRange,
    pub validation: DateRange,
    pub test: DateRange,
}

/// Chronologically disjoint train / validation / test samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<WindowedSample>,
    pub validation: Vec<WindowedSample>,
    pub test: Vec<WindowedSample>,
    pub boundaries: SplitBoundaries,
}

/// Split by target date. All samples sharing a date land in the same split,
/// so a split is closed once its cumulative count reaches
/// `round(frac * n)`; the test split takes the remainder.
pub fn chrono_split(mut samples: Vec<WindowedSample>, train_frac: f64, valid_frac: f64) -> Result<DatasetSplit> {
    if !(train_frac > 0.0 && valid_frac > 0.0 && train_frac + valid_frac < 1.0) {
        return Err(Error::Config(format!(
            "split fractions must be positive with sum below 1, got {train_frac}/{valid_frac}"
        )));
    }
    samples.sort_by(|a, b| {
        a.target_date
            .cmp(&b.target_date)
            .then_with(|| a.stock_id.cmp(&b.stock_id))
    });
    let n = samples.len();
    let train_goal = (train_frac * n as f64).round() as usize;
    let valid_goal = ((train_frac + valid_frac) * n as f64).round() as usize;

    let mut per_date: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for s in &samples {
        *per_date.entry(s.target_date).or_default() += 1;
    }
    let mut train_end = 0;
    let mut valid_end = 0;
    let mut seen = 0;
    for count in per_date.values() {
        let before = seen;
        seen += count;
        if before < train_goal {
            train_end = seen;
        }
        if before < valid_goal {
            valid_end = seen;
        }
    }

    let test: Vec<_> = samples.split_off(valid_end);
    let validation: Vec<_> = samples.split_off(train_end);
    let train = samples;
    if train.is_empty() || validation.is_empty() || test.is_empty() {
        return Err(Error::Config(format!(
            "{n} samples with fractions {train_frac}/{valid_frac} give an empty split ({}/{}/{})",
            train.len(),
            validation.len(),
            test.len()
        )));
    }
    let range = |v: &[WindowedSample]| DateRange {
        first: v[0].target_date,
        last: v[v.len() - 1].target_date,
    };
    let boundaries = SplitBoundaries {
        train: range(&train),
        validation: range(&validation),
        test: range(&test),
    };
    Ok(DatasetSplit {
        train,
        validation,
        test,
        boundaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MovementLabel;
    use crate::numerics::Matrix;
    use chrono::Days;

    fn sample(stock: &str, day: u64) -> WindowedSample {
        let d = NaiveDate::from_ymd_opt(2020, 6, 1).unwrap() + Days::new(day);
        WindowedSample {
            stock_id: stock.into(),
            target_date: d,
            first_feature_date: d - Days::new(2),
            last_feature_date: d - Days::new(1),
            x: Matrix::zeros(1, 2),
            y_m: MovementLabel::Up,
            y_v: false,
        }
    }

    #[test]
    fn ten_samples_six_two_two() {
        let s: Vec<_> = (0..10).map(|i| sample("A", i)).collect();
        let split = chrono_split(s, 0.6, 0.2).unwrap();
        assert_eq!((split.train.len(), split.validation.len(), split.test.len()), (6, 2, 2));
    }

    #[test]
    fn empty_test_is_config_error() {
        let s: Vec<_> = (0..10).map(|i| sample("A", i)).collect();
        assert!(matches!(chrono_split(s, 0.95, 0.04), Err(Error::Config(_))));
    }

    #[test]
    fn bad_fractions_rejected() {
        let s: Vec<_> = (0..10).map(|i| sample("A", i)).collect();
        assert!(chrono_split(s.clone(), 0.0, 0.2).is_err());
        assert!(chrono_split(s, 0.8, 0.2).is_err());
    }

    #[test]
    fn shared_dates_stay_together() {
        let mut s = Vec::new();
        for day in 0..10 {
            for stock in ["A", "B", "C"] {
                s.push(sample(stock, day));
            }
        }
        let split = chrono_split(s, 0.5, 0.25).unwrap();
        assert!(split.boundaries.train.last < split.boundaries.validation.first);
        assert!(split.boundaries.validation.last < split.boundaries.test.first);
        assert_eq!(split.train.len() % 3, 0);
    }
}
