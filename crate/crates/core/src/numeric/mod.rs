//! Dense matrices, reverse-mode differentiation, finite-difference checking
//! and the Adam optimiser.

mod adam;
mod gradcheck;
mod matrix;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{finite_difference_grad, max_relative_error};
pub use matrix::Matrix;
pub use tape::{Gradients, Tape, Var, LOG_FLOOR};

pub(crate) use tape::stable_sigmoid;
