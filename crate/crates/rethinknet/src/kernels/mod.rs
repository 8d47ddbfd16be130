//! Numeric kernels: the tensor carrier, recurrent cells with hand-written
//! backward passes, the weighted binary cross-entropy, weight dropout, the
//! Nadam optimizer and a finite-difference gradient checker.

mod cell;
mod dropout;
mod gradcheck;
pub mod init;
mod loss;
mod optim;

pub use cell::{CellGrads, CellKind, CellParams, CellState, StepCache};
pub use dropout::recurrent_dropout_mask;
pub use gradcheck::gradient_check;
pub use init::{glorot_uniform, identity_matrix, orthogonal};
pub use loss::{weighted_bce, weighted_bce_grad_logits, weighted_bce_grad_probs, BCE_EPSILON};
pub use optim::{NadamParams, NadamState};

/// Dense row-major 2-D array of f64, the crate's sole numeric carrier.
pub type Tensor = ndarray::Array2<f64>;

/// Logistic sigmoid, applied element-wise.
pub fn sigmoid(x: &Tensor) -> Tensor {
    x.mapv(|v| 1.0 / (1.0 + (-v).exp()))
}

/// True if every entry is a finite number.
pub fn all_finite(x: &Tensor) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Sum of squared entries.
pub fn squared_norm(x: &Tensor) -> f64 {
    x.iter().map(|v| v * v).sum()
}
