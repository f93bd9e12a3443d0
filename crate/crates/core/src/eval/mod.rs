//! Confusion matrices, classification metrics, attention importance and the
//! ablation grid.

mod attention;
mod grid;
mod metrics;

use thiserror::Error;

pub use attention::{
    attention_importance, key_importance, render_heatmap, AttentionReport, TextImportance,
    TweetImportance,
};
pub use grid::{
    ablation_grid, median, table3_grid, table4_grid, GridData, GridEntry, GridRow, GridTable,
};
pub use metrics::{
    confusion, confusion_by_name, metrics, ClassScores, ConfusionMatrix, EvalReport,
};

use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Shape(String),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("no evaluated examples")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}
