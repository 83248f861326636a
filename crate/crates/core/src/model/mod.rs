//! Forward pass: affine plane scores, soft-OR pooling within each class and
//! softmax competition across classes.

mod gmc;
mod planes;
mod softor;

pub use gmc::{argmax, EvalBuffers, ForwardResult, ForwardScratch, GmcModel};
pub use planes::Planes;
pub use softor::{class_score, posterior, responsibilities};
pub(crate) use softor::softmax_into;
