#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod exec;
pub mod gaussian;
pub mod matrix_json;
pub mod modes;
pub mod protocol;
#[allow(clippy::excessive_precision, clippy::needless_range_loop)]
pub mod quadrature;

pub use error::{Error, Result};
pub use exec::Execution;
