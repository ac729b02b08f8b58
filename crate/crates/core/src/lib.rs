//! Joint beamforming for backscatter integrated sensing and communication.
//!
//! An access point serves a single-antenna UE while activating, detecting and
//! decoding a passive backscatter tag with one waveform. This crate computes
//! the link metrics in closed form, maximizes the UE rate under tag/AP SINR
//! and power constraints, and checks the detection model by Monte-Carlo
//! simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection_sim;
pub mod error;
pub mod experiments;
pub mod model;
pub mod optimizer;
pub mod scenario;
pub mod socp;
pub mod units;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
