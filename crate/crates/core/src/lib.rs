//! Simulation and numerical auditing of private networked quantum sensing.
//!
//! The crate is organised in layers:
//!
//! - [`qcore`]: dense density-matrix engine (states, channels, measurements,
//!   fidelity / trace distance / Bures distance, symmetric logarithmic derivatives).
//! - [`metrology`]: quantum Fisher information matrices, the two quasi-privacy
//!   measures and their security bounds, and the search over privacy-equivalent
//!   parameter displacements.
//! - [`acproto`]: resources, converters and simulators for distributed parameter
//!   estimation, wired into composed systems that produce transcripts.
//! - [`harness`]: exact and Monte-Carlo distinguishing-advantage experiments and
//!   bound audits.
//! - [`veriflib`]: composition arithmetic for chaining state verification with
//!   parameter estimation.
//!
//! Qubit ordering convention: party 1 is the most-significant tensor factor. Every
//! [`qcore::DensityMatrix`] carries its party order explicitly.

#![forbid(unsafe_code)]

pub mod acproto;
pub mod error;
pub mod harness;
pub mod metrology;
pub mod qcore;
pub mod seed;
pub mod textconf;
pub mod veriflib;

pub use error::{Error, Result};
