//! Training loops, the learning-rate schedule, dev-set model selection and
//! the pretrain-then-finetune transfer procedure.

mod checkpoint;
mod config;
mod engine;
mod subset;
mod transfer;

use thiserror::Error;

pub use checkpoint::Checkpoint;
pub use config::{lr_at_step, TrainConfig};
pub use engine::{
    batch_gradient, derive_seed, evaluate, train, BestTracker, LogRecord, StageMarker,
    TrainOptions, TrainOutcome,
};
pub use subset::stratified_fraction;
pub use transfer::{finetune, init_from_pretrained, pretrain_public_figure, warm_up_head, HeadWarmup};

use crate::autodiff::ParamError;
use crate::eval::EvalError;
use crate::model::{CheckpointError, ModelError};
use crate::text::TextError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training setup: {0}")]
    Config(String),
    #[error("non-finite loss at step {step} (lr {lr:e})")]
    NonFinite { step: u64, lr: f64 },
    #[error("user `{0}` appears in both the pretraining and the fine-tuning data")]
    Overlap(String),
    #[error("{field}: {detail}")]
    Mismatch { field: String, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Text(#[from] TextError),
}
