//! Stopping-time, range and spacetime-cost analysis for surface-code decoders.
//!
//! Given a decoder's runtime distribution and failure rate, either measured as a trace
//! or modelled analytically, this crate finds the stopping time that maximizes the
//! reliable T-depth of a logical circuit and the distance and stopping time that
//! minimize its spacetime cost.

pub mod cli;
pub mod cost;
pub mod error;
pub mod models;
pub mod range;
pub mod stopping;
pub mod trace;

pub use error::{Error, Result};
