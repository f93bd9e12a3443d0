//! The hierarchical self-attention network.

mod check;
mod checkpoint;
mod config;
pub mod layers;
mod network;
mod params;

use thiserror::Error;

pub use check::{check_every_ablation, check_network, shift_off_kinks, AblationCheck, CheckError};
pub use checkpoint::{
    read_checkpoint, write_checkpoint, CheckpointError, CheckpointFile, CheckpointKind,
};
pub use config::{Ablation, ModelConfig};
pub use network::{AttentionTrace, Hsan, ModelWarning, UserGraph, UserOutput};
pub use params::{
    init_params, param_manifest, AttnIds, AttnLevel, ConvIds, LstmIds, ParamIds,
    CLASSIFIER_BIAS, CLASSIFIER_WEIGHT,
};
pub(crate) use params::xavier;

use crate::autodiff::{ParamError, Real, TensorError};
use crate::parallel::{map_ordered, Execution};
use crate::text::EncodedUser;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("attention input has every row masked")]
    AllMasked,
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Evaluation-mode outputs for a batch, in input order.
pub fn forward_batch<F: Real>(
    model: &Hsan<F>,
    users: &[EncodedUser],
    exec: Execution,
) -> Result<Vec<UserOutput<F>>, ModelError> {
    map_ordered(exec, users, |_, u| model.predict(u))
        .into_iter()
        .collect()
}
