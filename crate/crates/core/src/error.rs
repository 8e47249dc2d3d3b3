use alloc::string::String;

/// Errors produced anywhere in the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch at node {node} ({op}): {detail}")]
    Shape {
        node: usize,
        op: &'static str,
        detail: String,
    },
    #[error("input `{0}` is not bound")]
    Unbound(String),
    #[error("gradient requested for a non-scalar output of shape {0:?}")]
    NonScalarOutput(alloc::vec::Vec<usize>),
    #[error("no gradient supplied for parameter `{0}`")]
    MissingGradient(String),
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
}

pub type Result<T> = core::result::Result<T, Error>;
