//! Relevance-integrated large-scale inference.
//!
//! Estimates how the score distribution at a covariate profile departs from
//! the pooled ensemble, draws artificial relevant samples (LASERs) at that
//! profile, and runs global engines (local fdr, BH, empirical Bayes) on them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod custom;
pub mod data;
pub mod engines;
pub mod error;
pub mod laser;
pub mod linalg;
pub mod lp;
pub mod regress;
pub mod relevance;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, ErrorClass, Result};
