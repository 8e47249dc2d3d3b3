//! Minimal reverse-mode automatic differentiation over dense tensors.
//!
//! All arithmetic is `f64`. Graphs are rebuilt for every batch; building is
//! symbolic and cheap, evaluation is single-threaded and deterministic.

mod adam;
mod graph;
pub(crate) mod kernels;
mod params;
mod tensor;

pub use adam::AdamState;
pub use graph::{eval_and_grad, BinaryOp, Bindings, Evaluation, Gradients, Graph, NodeId, Op, Reduce, UnaryOp};
pub use params::ParamStore;
pub use tensor::Tensor;
