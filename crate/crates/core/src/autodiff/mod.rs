//! Dense tensors, reverse-mode differentiation over the operations the
//! network needs, the Adam optimizer and a finite-difference checker.

mod adam;
mod gradcheck;
mod params;
mod real;
mod tape;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{grad_check, relative_error, ClosureLoss, GradCheckError, GradCheckReport, LossFn, ParamCheck};
pub use params::{Grads, ParamError, ParamId, ParamStore};
pub use real::{Precision, Real};
pub use tape::{Mode, Tape, Var, PROB_FLOOR};
pub use tensor::{masked_softmax, Tensor, TensorError, MASK_FILL};
