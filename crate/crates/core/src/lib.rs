//! Two-way relaying: optimal amplify-and-forward weights, dual channel
//! matching, cut-set outer bounds and diversity-multiplexing analysis of
//! compress-and-forward.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod af_optimal;
pub mod bounds;
pub mod channel;
pub mod dcm;
pub mod dmt;
pub mod error;
pub mod harness;
pub mod numkernel;

pub use error::{Error, Result};
