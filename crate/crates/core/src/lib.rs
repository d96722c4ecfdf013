//! Discrete-cycle simulator and verification workbench for a Simplex-style
//! pull-over controller under goal-aware RSS.
//!
//! The crate is generic over the scalar type: [`Exact`] computes with
//! arbitrary-precision rationals, [`Float`] with `f64`. All predicates,
//! machines, the controller, the proof-obligation checker and the harness are
//! written once against [`scalar::Scalar`].

pub mod config;
pub mod controller;
pub mod error;
pub mod harness;
pub mod kinematics;
pub mod machines;
pub mod multiphase;
pub mod po;
pub mod report;
pub mod rss;
pub mod sample;
pub mod scalar;
pub mod world;

/// Exact rational arithmetic (the default for checking).
pub type Exact = scalar::Rat;
/// IEEE-754 double arithmetic (for speed comparisons and tolerance studies).
pub type Float = f64;

pub use error::{Error, Result};
pub use scalar::Scalar;
