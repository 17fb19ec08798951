//! Tail-index estimation for top-coded data.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod cli;
pub mod design;
pub mod distributions;
pub mod effects;
pub mod error;
pub mod imputation;
pub mod io;
pub mod monte_carlo;
pub mod regression;
pub mod threshold;
