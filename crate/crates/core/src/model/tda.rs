//! Temporal-distance weighting of past hidden states.
//!
//! At step `t` the hidden state from step `i` (1-based, `i <= t`) gets weight
//! `1 / (t - i + 1)`: the newest state weighs 1, the one before 1/2, and so
//! on. The weighted sum of all states replaces `h_prev` in one extra GRU
//! update, producing the context vector.

use crate::error::{Error, Result};
use crate::model::gru::{CellVars, GruCellParams};
use crate::numerics::{Matrix, Tape, Var};

/// Weights for steps `1..=t`, oldest first.
pub fn tda_weights(t: usize) -> Result<Vec<f64>> {
    if t < 1 {
        return Err(Error::Domain("temporal-distance weights need t >= 1".into()));
    }
    Ok((1..=t).map(|i| 1.0 / (t - i + 1) as f64).collect())
}

/// `H_t`, the sum of the weights at step `t`.
pub fn harmonic(t: usize) -> f64 {
    (1..=t).rev().map(|k| 1.0 / k as f64).sum()
}

/// `Σ w^i h^i` on the tape, optionally divided by `H_t`.
pub(crate) fn weighted_sum(tape: &mut Tape, hidden: &[Var], normalize: bool) -> Result<Var> {
    let weights = tda_weights(hidden.len())?;
    let norm = if normalize { harmonic(hidden.len()) } else { 1.0 };
    let mut acc: Option<Var> = None;
    for (&h, w) in hidden.iter().zip(weights) {
        let term = tape.scale(h, w / norm)?;
        acc = Some(match acc {
            Some(a) => tape.add(a, term)?,
            None => term,
        });
    }
    Ok(acc.expect("tda_weights guarantees at least one state"))
}

pub(crate) fn context_on_tape(
    tape: &mut Tape,
    cell: &CellVars,
    x_t: Var,
    hidden: &[Var],
    normalize: bool,
) -> Result<Var> {
    let pooled = weighted_sum(tape, hidden, normalize)?;
    cell.step(tape, x_t, pooled)
}

/// Context `c^t = GRU(x^t, Σ_i w^i h^i)` on plain matrices.
pub fn tda_context(x_t: &Matrix, hidden: &[Matrix], params: &GruCellParams, normalize: bool) -> Result<Matrix> {
    if hidden.is_empty() {
        return Err(Error::Domain("context needs at least one hidden state".into()));
    }
    params.validate()?;
    let mut tape = Tape::new();
    let cell = CellVars::constants(&mut tape, params);
    let x = tape.constant(x_t.clone());
    let hs: Vec<Var> = hidden.iter().map(|h| tape.constant(h.clone())).collect();
    let c = context_on_tape(&mut tape, &cell, x, &hs, normalize)?;
    Ok(tape.value(c).clone())
}
