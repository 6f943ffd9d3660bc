//! Joint objective, Adam, the training loop and evaluation.

mod adam;
mod eval;
mod loss;
mod trainer;

pub use adam::{clip_grad_norm, Adam};
pub use eval::{evaluate, EvalReport};
pub use loss::{batch_objective, joint_loss};
pub use trainer::{
    model_config, train, train_from, EpochRecord, LossBreakdown, Stage, StageSummary, TrainConfig, TrainReport,
};
