//! Near-field beam training for extremely large-scale antenna arrays.
//!
//! The crate models a uniform linear array with a spherical-wavefront
//! line-of-sight channel, builds far-field (DFT) and polar-domain codebooks,
//! and runs three training protocols against them: far-field exhaustive
//! sweeping, polar-domain exhaustive sweeping, and the two-phase
//! angle-then-distance search. A least-squares channel-estimation baseline
//! and a Monte Carlo harness for success rate, achievable rate and pilot
//! overhead sit on top.

pub mod cli;
pub mod codebook;
pub mod config;
pub mod error;
pub mod geometry;
pub mod pattern;
pub mod plot;
pub mod report;
pub mod sim;
pub mod training;

pub use error::{Error, Result};
