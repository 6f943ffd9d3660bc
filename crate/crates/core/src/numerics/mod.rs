//! Dense matrices, named parameter storage and a small reverse-mode tape.

mod matrix;
mod params;
mod tape;

pub use matrix::{bce_with_logits, sigmoid, BinaryOp, Matrix, UnaryOp};
pub use params::{ParamId, ParamStore};
pub use tape::{Tape, Var};
