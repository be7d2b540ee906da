//! Simulation of a capacitive tactile blood-pressure sensor: a clamped
//! membrane array over an artery, a second-order sigma-delta converter
//! per element, CIC + FIR decimation to 12-bit samples at 1 kHz, and a
//! calibration pipeline that turns the strongest element's output into
//! an arterial pressure waveform.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod decimation;
mod error;
pub mod frontend;
pub mod membrane;
pub mod pipeline;
pub mod scene;

pub use error::{Error, Result};
