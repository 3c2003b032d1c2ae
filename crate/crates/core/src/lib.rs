//! Optimal control of a thermal energy storage for a heating prosumer.
//!
//! The value function of the storage problem is computed by backward
//! dynamic programming on a finite-difference scheme in time, residual
//! demand and storage temperature. The crate also calibrates the model,
//! simulates the resulting policy and checks the solution against
//! Monte-Carlo estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod constraints;
pub mod costs;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod model;
pub mod policy;
pub mod presets;
pub mod solver;
pub mod validate;

pub use error::{Error, Result};
