//! Dense tensors with define-by-run reverse-mode differentiation.

mod dropout;
pub mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use dropout::variational_dropout;
pub use params::{ParamId, ParamStore, Parameter};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
