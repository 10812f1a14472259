// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Library half of the `cvalue` binary: file formats, the `compare` and
//! `simulate` commands and their error type.

pub mod compare;
pub mod error;
pub mod io;
pub mod simulate;

pub use error::{CliError, Result};
