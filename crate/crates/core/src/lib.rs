//! Attractors of iterated function systems, shift-space coding maps, and
//! greatest fixed points of set-valued operators.

// `!(x > 0.0)` rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod cli;
pub mod coding;
pub mod error;
pub mod ifs;
pub mod lattice;
pub mod metric;
pub mod rational;
pub mod report;
pub mod shift;

pub use error::{Error, Result};
