//! Dense tensor math and a small reverse-mode tape.
//!
//! Everything here runs in 64-bit floats. The op set is deliberately closed:
//! it covers what the spatial aggregator and the baseline connectors need and
//! nothing more.

mod error;
mod gradcheck;
mod ops;
mod tape;
mod tensor;
mod text;

pub use error::{NumError, Result};
pub use gradcheck::{grad_check, GradCheckReport, ParamError};
pub use ops::{bilinear_resize, global_mean_pool, matmul, softmax_last};
pub use tape::{AttentionPattern, Gradients, ParamId, Tape, Var};
pub use tensor::Tensor;
pub use text::{read_tensor, read_tensor_file, write_tensor, write_tensor_file};
