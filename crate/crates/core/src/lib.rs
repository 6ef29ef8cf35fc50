//! CSL collapse-model force noise on detector test masses, and the
//! exclusion bounds on the collapse rate that measured detector noise implies.
//!
//! Internally everything is SI, angular frequency and two-sided power
//! densities; [`units`] holds the conversions used at the edges.

pub mod bundled;
pub mod csl;
pub mod detector;
pub mod error;
pub mod exclusion;
pub mod io;
pub mod quadrature;
pub mod response;
pub mod specfun;
pub mod units;

pub use error::{Error, Result};
