//! Blind quantum data compression with finite local approximations.

// Negated comparisons double as NaN rejection.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binning;
pub mod channel;
pub mod commutant;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod gallery;
pub mod io;
pub mod linalg;

pub use error::{Error, Result};
