//! Doppler-driven RF source seeking for a constant-speed UAV.
//!
//! The crate simulates a UAV that homes in on a stationary emitter using
//! only the frequency of the received beacon and its own heading:
//!
//! * [`world`]: planar geometry, scatterer field, kinematics.
//! * [`channel`]: multipath beacon synthesis with carrier offset drift.
//! * [`estimator`]: DFT peak plus parabolic refinement.
//! * [`seeker`]: outlier gate, circular initialization, perturbation feedback.
//! * [`harness`]: closed-loop episodes and Monte Carlo statistics.
//! * [`cli`]: the `rfseek` command line.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod rng;
pub mod seeker;
pub mod world;

pub use error::{Error, Result};
