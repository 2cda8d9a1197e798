//! Concentration inequalities for suprema of empirical processes under
//! sampling without replacement, transductive risk bounds built on them, and
//! exact / Monte Carlo machinery that checks every bound numerically.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod empirical_process;
pub mod error;
pub mod experiment;
pub mod ground_set;
pub mod inequality_bank;
pub mod kernel_complexity;
pub mod localization;
pub mod mc_verifier;
pub mod table;
pub mod transductive_lab;

pub use error::{LabError, Result};
