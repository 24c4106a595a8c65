//! Numeric primitives shared by every flow.
//!
//! All kernels are pure functions of their arguments. Each one reports the
//! multiply-accumulates it performs to [`macs`], which is how the analytic
//! cost model is cross-checked against real execution.

mod conv;
mod gru;
mod lu;
pub mod macs;
mod tensor;

pub use conv::{causal_history, depthwise_conv3, pointwise_conv, DW_KERNEL, DW_HISTORY};
pub use gru::{gru_cell, GruParams};
pub use lu::{lu_invert_logdet, LuInverse, SINGULAR_THRESHOLD};
pub use tensor::{Matrix, Tensor1D};
