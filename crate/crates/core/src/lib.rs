//! Scan-pattern design and evaluation for two-axis resonant scanners.

pub mod cli;
pub mod coverage;
pub mod design;
pub mod error;
pub mod frac;
pub mod io;
pub mod modulated;
pub mod nn;
pub mod pattern;
pub mod phase;
pub mod scanner;

pub use error::{Error, Result};
