// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod curves;
pub mod duplication;
pub mod error;
pub mod examples;
pub mod exante;
pub mod mechanisms;
pub mod simulate;
pub mod cli;
