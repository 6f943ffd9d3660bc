//! GRU encoder, temporal-distance context, fused heads and checkpoints.

pub mod checkpoint;
mod gru;
mod net;
mod tda;

pub use gru::{gru_step, GruCellParams};
pub use net::{
    AlertaNet, ForwardTrace, GraphOutputs, ModelConfig, ModelKind, MOVEMENT_B, MOVEMENT_W, VOLATILITY_B,
    VOLATILITY_W,
};
pub use tda::{harmonic, tda_context, tda_weights};
