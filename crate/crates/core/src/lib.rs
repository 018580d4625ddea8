// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arm;
pub mod assets;
pub mod bt;
pub mod cell;
pub mod geometry;
pub mod knowledge;
pub mod scenarios;
pub mod sim;
