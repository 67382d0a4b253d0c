//! Degenerate elastic flow of closed curves on S² and its Hopf-torus lift to S³.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod curve;
pub mod energy;
pub mod error;
pub mod family;
pub mod flow;
pub mod hopf;
pub mod moduli;
pub mod quat;

pub use error::{Error, Result};
