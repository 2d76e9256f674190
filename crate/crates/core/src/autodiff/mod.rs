//! Dense tensors and a define-by-run reverse-mode tape.
//!
//! Broadcasting is limited to scalar-vs-tensor; every other shape relation
//! is explicit (`add_bias`, `slice_cols`, ...). Ops that need a hand-written
//! backward rule (the QKAN layer, the gated recursion) register through
//! [`Tape::custom`].

mod tape;
mod tensor;

pub use tape::{BackwardRule, Tape, Var};
pub use tensor::Tensor;
pub(crate) use tensor::matmul_raw;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("invalid shape {0:?}")]
    InvalidShape(Vec<usize>),
    #[error("shape {shape:?} does not hold {len} values")]
    LengthMismatch { shape: Vec<usize>, len: usize },
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("range [{start}, {start}+{len}) exceeds extent {available}")]
    OutOfRange {
        start: usize,
        len: usize,
        available: usize,
    },
    #[error("backward called on non-scalar root of shape {0:?}")]
    NonScalarRoot(Vec<usize>),
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
}
