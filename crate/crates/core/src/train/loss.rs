use crate::data::MovementLabel;
use crate::error::{Error, Result};
use crate::model::{AlertaNet, ForwardTrace, GraphOutputs};
use crate::numerics::{bce_with_logits, Matrix, Tape, Var};

/// Per-sample joint objective
/// `BCE(logit_m, y_m)·[y_m ≠ abstain] + λ·BCE(logit_v, y_v)`.
pub fn joint_loss(trace: &ForwardTrace, y_m: MovementLabel, y_v: bool, lambda: f64) -> f64 {
    let movement = y_m
        .target()
        .map_or(0.0, |y| bce_with_logits(trace.movement_logit, y));
    movement + lambda * bce_with_logits(trace.volatility_logit, f64::from(u8::from(y_v)))
}

/// Loss nodes for one batch. `total = movement + λ·volatility`, each a batch mean.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BatchLoss {
    pub total: Var,
    pub movement: Var,
    pub volatility: Var,
}

/// Weighting applied on top of the per-sample objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LossWeights {
    pub movement: f64,
    pub lambda: f64,
    /// Multiplier on positive volatility samples.
    pub vol_pos_weight: f64,
}

pub(crate) fn batch_loss(
    tape: &mut Tape,
    out: &GraphOutputs,
    labels: &[(MovementLabel, bool)],
    w: LossWeights,
) -> Result<BatchLoss> {
    let n = labels.len();
    let inv = 1.0 / n as f64;
    let mut ym = Matrix::zeros(1, n);
    let mut wm = Matrix::zeros(1, n);
    let mut yv = Matrix::zeros(1, n);
    let mut wv = Matrix::zeros(1, n);
    for (j, &(m, v)) in labels.iter().enumerate() {
        if let Some(t) = m.target() {
            ym.set(0, j, t);
            wm.set(0, j, inv);
        }
        yv.set(0, j, f64::from(u8::from(v)));
        wv.set(0, j, if v { w.vol_pos_weight * inv } else { inv });
    }
    let movement = tape.bce_with_logits_sum(out.movement_logit, ym, wm)?;
    let volatility = tape.bce_with_logits_sum(out.volatility_logit, yv, wv)?;
    let m_term = tape.scale(movement, w.movement)?;
    let v_term = tape.scale(volatility, w.lambda)?;
    let total = tape.add(m_term, v_term)?;
    Ok(BatchLoss {
        total,
        movement,
        volatility,
    })
}

/// Batch-mean joint objective for `net` on `windows`, with `∂loss/∂param`
/// left in `net.params`' gradient slots.
///
/// Positive volatility samples are weighted by `vol_pos_weight`; with a
/// weight of 1 this is the mean of [`joint_loss`] over the batch.
pub fn batch_objective(
    net: &mut AlertaNet,
    windows: &[&Matrix],
    labels: &[(MovementLabel, bool)],
    lambda: f64,
    vol_pos_weight: f64,
) -> Result<f64> {
    if windows.len() != labels.len() {
        return Err(Error::dims("batch_objective", (windows.len(), 1), (labels.len(), 1)));
    }
    let mut tape = Tape::new();
    let out = net.build_graph(&mut tape, windows)?;
    let loss = batch_loss(
        &mut tape,
        &out,
        labels,
        LossWeights {
            movement: 1.0,
            lambda,
            vol_pos_weight,
        },
    )?;
    tape.backward(loss.total, &mut net.params)?;
    Ok(tape.value(loss.total).get(0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn trace(lm: f64, lv: f64) -> ForwardTrace {
        ForwardTrace {
            hidden: Matrix::zeros(1, 1),
            context: None,
            movement_logit: lm,
            movement_prob: crate::numerics::sigmoid(lm),
            volatility_logit: lv,
            volatility_prob: crate::numerics::sigmoid(lv),
        }
    }

    #[test]
    fn examples() {
        assert!((joint_loss(&trace(0.0, 3.0), MovementLabel::Up, false, 0.0) - LN_2).abs() < 1e-15);
        assert!((joint_loss(&trace(7.0, 0.0), MovementLabel::Abstain, false, 1.0) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn finite_over_wide_logit_range() {
        for z in [-500.0, -100.0, -1.0, 0.0, 1.0, 100.0, 500.0] {
            for m in [MovementLabel::Up, MovementLabel::Down, MovementLabel::Abstain] {
                for v in [true, false] {
                    assert!(joint_loss(&trace(z, -z), m, v, 1.0).is_finite());
                }
            }
        }
    }
}
