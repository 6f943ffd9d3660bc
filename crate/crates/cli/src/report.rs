//! Comparison tables, rendered as text and serialized as JSON.

use std::fmt::Write as _;

use alerta_core::metrics::TaskMetrics;
use alerta_core::train::EvalReport;
use serde::{Deserialize, Serialize};

/// One model's held-out metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub name: String,
    pub ablation: String,
    pub model: String,
    pub best_epoch: usize,
    pub movement_acc: Option<f64>,
    pub movement_mcc: Option<f64>,
    pub volatility_acc: f64,
    pub volatility_mcc: f64,
    pub volatility_auc: Option<f64>,
    pub eval: EvalReport,
}

impl MetricsRow {
    pub fn new(name: String, ablation: String, model: String, best_epoch: usize, eval: EvalReport) -> Self {
        let movement: Option<&TaskMetrics> = eval.movement.as_ref();
        Self {
            name,
            ablation,
            model,
            best_epoch,
            movement_acc: movement.map(|m| m.accuracy),
            movement_mcc: movement.map(|m| m.mcc),
            volatility_acc: eval.volatility.accuracy,
            volatility_mcc: eval.volatility.mcc,
            volatility_auc: eval.volatility.auc,
            eval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub title: String,
    pub split: String,
    pub rows: Vec<MetricsRow>,
    pub manifest: String,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

impl ComparisonTable {
    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{} ({} split)", self.title, self.split);
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}",
            "model", "mov_acc", "mov_mcc", "vol_acc", "vol_mcc", "vol_auc"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}",
                r.name,
                cell(r.movement_acc),
                cell(r.movement_mcc),
                cell(Some(r.volatility_acc)),
                cell(Some(r.volatility_mcc)),
                cell(r.volatility_auc)
            );
        }
        out
    }
}

/// Text form of a single evaluation.
pub fn render_eval(report: &EvalReport, split: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} ({} split, threshold {})", report.model, split, report.threshold);
    let _ = writeln!(
        out,
        "{:<10}  {:>7}  {:>9}  {:>9}  {:>9}",
        "task", "samples", "acc", "mcc", "auc"
    );
    let mut line = |task: &str, m: Option<&TaskMetrics>| {
        let _ = match m {
            Some(m) => writeln!(
                out,
                "{:<10}  {:>7}  {:>9}  {:>9}  {:>9}",
                task,
                m.samples,
                cell(Some(m.accuracy)),
                cell(Some(m.mcc)),
                cell(m.auc)
            ),
            None => writeln!(out, "{task:<10}  {:>7}  {:>9}  {:>9}  {:>9}", 0, "n/a", "n/a", "n/a"),
        };
    };
    line("movement", report.movement.as_ref());
    line("volatility", Some(&report.volatility));
    let _ = writeln!(out, "abstained movement samples: {}", report.movement_abstained);
    out
}
