//! Dense tensors with a dynamically recorded computation graph and
//! reverse-mode differentiation.

mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{
    finite_difference_check, finite_difference_check_with, relative_error, GradCheckReport,
    EPS_RANGE, REL_FLOOR,
};
pub use params::{BoundParams, Grads, ParamEntry, ParamFile, ParamStore, PARAMS_FORMAT, PARAMS_VERSION};
pub use tape::{OpKind, Tape, Var, LOG_FLOOR};
pub use tensor::Tensor;
