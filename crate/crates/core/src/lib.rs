//! Cucker-Smale flocking with a bonding force: model, integrator, diagnostics
//! and the reference experiments.

// NaN has to fail every bound check, so comparisons are written negated.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod init;
pub mod integrator;
pub mod model;
pub mod output;
