//! Cross-layer performance model of CSMA/CA with binary exponential backoff
//! over imperfectly sensed cognitive-radio channels.
//!
//! - [`model`]: scenario parameters, energy detection, channel-occupancy process.
//! - [`chain`]: the joint `(stage, timer, busy-count)` Markov chain and its
//!   stationary distribution.
//! - [`analytic`]: closed-form attempt/collision probabilities, their fixed
//!   point and parameter sweeps.
//! - [`sim`]: slot-level Monte Carlo simulator.
//! - [`validate`]: analytic-versus-simulation reports.
//!
//! ```
//! use cogmac_core::{analytic::solve_fixed_point, model::ModelParams};
//!
//! let params = ModelParams { stations: 20, ..ModelParams::default() };
//! let op = solve_fixed_point(&params).unwrap();
//! assert!(op.tau > 0.0 && op.p < 1.0);
//! ```

pub mod analytic;
pub mod chain;
pub mod error;
pub mod exec;
pub mod model;
pub mod report;
pub mod sim;
pub mod validate;

pub use error::{Error, Result};
pub use exec::Execution;
