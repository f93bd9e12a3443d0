pub mod autodiff;
pub mod baselines;
pub mod eval;
pub mod labels;
pub mod model;
pub mod parallel;
pub mod synth;
pub mod text;
pub mod train;

pub use labels::{LabelError, LabelSet};
