// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod affine;
pub mod cvalue;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod normal_means;
pub mod special_fn;
pub mod simulation;
