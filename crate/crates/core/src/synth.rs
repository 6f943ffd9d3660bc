//! Synthetic per-stock frames with a planted, recoverable signal.
//!
//! Features are log-normal, so their log-normalized values are standard
//! normal. The direction of the return into day `t` is
//! `sign(w · ln x^{t-1})`, flipped with probability `flip_prob`; its size
//! stays between 1% and 3% so no day falls in the movement dead zone. When
//! feature 0 on day `t - lag` exceeds its 90th percentile the size is drawn
//! from 6%..9% instead, which the labeler flags as a volatility event.

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{FeatureFrame, FeatureGroup};
use crate::error::{Error, Result};

/// 90th percentile of the standard normal; feature 0 exceeds
/// `exp(Z90)` on 10% of days.
pub const Z90: f64 = 1.2815515655446004;

const CALM_RETURN: (f64, f64) = (0.01, 0.03);
const EVENT_RETURN: (f64, f64) = (0.06, 0.09);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub stock_id: String,
    pub n_days: usize,
    pub seed: u64,
    /// One weight per feature column; the signal is `w · ln x`.
    pub signal_weights: Vec<f64>,
    /// Group of each feature column; also decides the column name prefix.
    pub groups: Vec<FeatureGroup>,
    pub flip_prob: f64,
    /// Volatility events on day `t` depend on feature 0 at day `t - lag`.
    pub lag: usize,
    /// Window length the data is meant for; `lag` must be below it.
    pub window: usize,
    pub base_price: f64,
    pub start_date: NaiveDate,
}

impl SynthSpec {
    /// `d` columns cycling through sentiment, macro and trend groups, with
    /// the signal spread evenly over all of them.
    pub fn new(n_days: usize, d: usize, seed: u64) -> Self {
        let cycle = [FeatureGroup::Sentiment, FeatureGroup::Macro, FeatureGroup::Trend];
        Self {
            stock_id: "SYN".into(),
            n_days,
            seed,
            signal_weights: vec![1.0; d],
            groups: (0..d).map(|i| cycle[i % cycle.len()]).collect(),
            flip_prob: 0.1,
            lag: 7,
            window: 10,
            base_price: 100.0,
            start_date: NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date"),
        }
    }

    pub fn dim(&self) -> usize {
        self.signal_weights.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.groups
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let prefix = match g {
                    FeatureGroup::Price => "price",
                    FeatureGroup::Sentiment => "sent",
                    FeatureGroup::Macro => "macro",
                    FeatureGroup::Trend => "trend",
                    FeatureGroup::Other => "other",
                };
                format!("{prefix}_{i}")
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.signal_weights.is_empty() || self.groups.len() != self.signal_weights.len() {
            return bad(format!(
                "need one group per signal weight ({} weights, {} groups)",
                self.signal_weights.len(),
                self.groups.len()
            ));
        }
        if !self.signal_weights.iter().all(|w| w.is_finite()) || self.signal_weights.iter().all(|&w| w == 0.0) {
            return bad("signal weights must be finite and not all zero".into());
        }
        if !(0.0..0.5).contains(&self.flip_prob) {
            return bad(format!("flip probability {} outside [0, 0.5)", self.flip_prob));
        }
        if self.lag == 0 || self.lag >= self.window {
            return bad(format!("lag {} must satisfy 1 <= lag < window {}", self.lag, self.window));
        }
        if self.n_days < self.window + 2 {
            return bad(format!("{} days is fewer than window + 2 = {}", self.n_days, self.window + 2));
        }
        if !(self.base_price > 0.0 && self.base_price.is_finite()) {
            return bad(format!("base price {} must be positive", self.base_price));
        }
        Ok(())
    }
}

/// What the generator decided for each day. Index 0 is the first day and has
/// no return, so its entries are `false`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SynthTruth {
    /// Direction before noise: `w · ln x^{t-1} >= 0`.
    pub clean_up: Vec<bool>,
    pub flipped: Vec<bool>,
    pub up: Vec<bool>,
    pub event: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthFrame {
    pub frame: FeatureFrame,
    pub truth: SynthTruth,
}

pub fn generate(spec: &SynthSpec) -> Result<FeatureFrame> {
    generate_with_truth(spec).map(|s| s.frame)
}

pub fn generate_with_truth(spec: &SynthSpec) -> Result<SynthFrame> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim();
    let n = spec.n_days;
    let feats: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z.exp()
                })
                .collect()
        })
        .collect();
    let threshold = Z90.exp();

    let mut truth = SynthTruth {
        clean_up: vec![false; n],
        flipped: vec![false; n],
        up: vec![false; n],
        event: vec![false; n],
    };
    let mut prices = Vec::with_capacity(n);
    prices.push(spec.base_price);
    for t in 1..n {
        let score: f64 = spec
            .signal_weights
            .iter()
            .zip(&feats[t - 1])
            .map(|(w, x)| w * x.ln())
            .sum();
        let clean_up = score >= 0.0;
        let flipped = rng.gen::<f64>() < spec.flip_prob;
        let up = clean_up != flipped;
        let event = t >= spec.lag && feats[t - spec.lag][0] > threshold;
        let (lo, hi) = if event { EVENT_RETURN } else { CALM_RETURN };
        let size = rng.gen_range(lo..hi);
        let r = if up { size } else { -size };
        prices.push(prices[t - 1] * (1.0 + r));
        truth.clean_up[t] = clean_up;
        truth.flipped[t] = flipped;
        truth.up[t] = up;
        truth.event[t] = event;
    }

    let days = (0..n)
        .map(|t| (spec.start_date + Days::new(t as u64), prices[t], feats[t].clone()))
        .collect();
    let frame = FeatureFrame::from_days(spec.stock_id.clone(), spec.column_names(), days)?;
    Ok(SynthFrame { frame, truth })
}

/// Best achievable movement accuracy: the flip noise is the only error source.
pub fn bayes_rate(spec: &SynthSpec) -> f64 {
    1.0 - spec.flip_prob
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{movement_label, volatility_label, LabelThresholds, MovementLabel};

    #[test]
    fn bayes_rate_examples() {
        let mut s = SynthSpec::new(100, 4, 1);
        for (p, want) in [(0.1, 0.9), (0.0, 1.0), (0.25, 0.75)] {
            s.flip_prob = p;
            assert_eq!(bayes_rate(&s), want);
        }
    }

    #[test]
    fn deterministic() {
        let s = SynthSpec::new(300, 5, 9);
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let mut other = s.clone();
        other.seed = 10;
        assert_ne!(generate(&s).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn noiseless_signal_is_perfectly_predictable() {
        let mut s = SynthSpec::new(2000, 6, 3);
        s.flip_prob = 0.0;
        s.signal_weights = vec![1.0, -0.5, 0.25, 0.0, 2.0, -1.0];
        let f = generate(&s).unwrap();
        let th = LabelThresholds::default();
        for t in 1..f.len() {
            let score: f64 = (0..6).map(|i| s.signal_weights[i] * f.values.get(i, t - 1).ln()).sum();
            let label = movement_label(f.adj_close[t - 1], f.adj_close[t], th.dead_zone).unwrap();
            let predicted = if score >= 0.0 { MovementLabel::Up } else { MovementLabel::Down };
            assert_eq!(label, predicted, "day {t}");
        }
    }

    #[test]
    fn labeler_agrees_with_generator() {
        let s = SynthSpec::new(3000, 4, 21);
        let g = generate_with_truth(&s).unwrap();
        let th = LabelThresholds::default();
        let f = &g.frame;
        assert!(f.adj_close.iter().all(|&p| p > 0.0));
        for t in 1..f.len() {
            let (a, b) = (f.adj_close[t - 1], f.adj_close[t]);
            let m = movement_label(a, b, th.dead_zone).unwrap();
            assert_ne!(m, MovementLabel::Abstain);
            assert_eq!(m == MovementLabel::Up, g.truth.up[t]);
            assert_eq!(volatility_label(a, b, th.outlier).unwrap(), g.truth.event[t], "day {t}");
        }
        let rate = g.truth.event.iter().filter(|&&e| e).count() as f64 / f.len() as f64;
        assert!((rate - 0.1).abs() < 0.03, "event rate {rate}");
    }

    #[test]
    fn flip_rate_matches_spec() {
        let s = SynthSpec::new(5000, 8, 17);
        let g = generate_with_truth(&s).unwrap();
        let flips = g.truth.flipped[1..].iter().filter(|&&f| f).count();
        let rate = flips as f64 / (s.n_days - 1) as f64;
        assert!((rate - 0.1).abs() <= 0.02, "flip rate {rate}");
        for t in 1..s.n_days {
            assert_eq!(g.truth.up[t], g.truth.clean_up[t] != g.truth.flipped[t]);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let base = SynthSpec::new(100, 3, 0);
        let mut s = base.clone();
        s.flip_prob = 0.5;
        assert!(generate(&s).is_err());
        let mut s = base.clone();
        s.lag = 10;
        assert!(generate(&s).is_err());
        let mut s = base.clone();
        s.n_days = 11;
        assert!(generate(&s).is_err());
        let mut s = base.clone();
        s.groups.pop();
        assert!(generate(&s).is_err());
        let mut s = base;
        s.signal_weights = vec![0.0; 3];
        assert!(generate(&s).is_err());
    }
}
