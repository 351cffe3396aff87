//! Simulation and regularity analysis for stochastic heat and Burgers-type
//! equations driven by space-time white noise.

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod noise;
pub mod solver;

pub use error::{Error, Result};
