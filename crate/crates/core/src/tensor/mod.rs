//! Reverse-mode automatic differentiation over dense `f64` matrices.
//!
//! A [`Tape`] records each primitive as it is evaluated; [`Tape::backward`]
//! walks the record in reverse to fill in gradients of trainable leaves.
//! Summation order is fixed, so identical inputs give bit-identical results.

mod gradcheck;
mod matrix;
mod tape;

pub use gradcheck::{grad_check, grad_check_many, relative_error, GradCheckReport, RELATIVE_FLOOR};
pub use matrix::Matrix;
pub use tape::{Tape, Var};

pub use tape::sigmoid;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("backward needs a 1x1 loss, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("{op}: row index {index} out of range for {bound} rows")]
    Index {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("{0}: no inputs")]
    Empty(&'static str),
}
