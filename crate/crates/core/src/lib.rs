//! Staged-departure evacuation modelling.
//!
//! The crate covers macroscopic network dynamics, trip-length geometry of an
//! evacuation zone, flood-arrival risk, and risk-averse release control.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bathtub;
pub mod control;
pub mod demand;
pub mod error;
pub mod flood;
pub mod geometry;
pub mod nfd;
pub mod output;
pub mod quad;
pub mod reproduce;
pub mod risk;
pub mod scenario;

pub use error::{EvacError, Result};
