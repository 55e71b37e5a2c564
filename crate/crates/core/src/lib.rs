//! Numerical laboratory for sharp fractional Sobolev inequalities.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conformal;
pub mod cylinder;
pub mod duality;
pub mod error;
pub mod optimize;
pub mod report;
pub mod specialfn;
pub mod stability;
pub mod zonal;

pub use error::{LabError, Result};
