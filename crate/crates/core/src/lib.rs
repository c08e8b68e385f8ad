//! Online, constant-memory estimation of the mode of a smooth density.
//!
//! The estimator keeps a single point `m` and, for every incoming sample
//! `x`, moves it along a noisy gradient of the kernel-smoothed density:
//!
//! ```text
//! m <- m + a_n * (grad K_eps(m - x) - lambda * m)
//! ```
//!
//! where `K_eps` is a scaled kernel, `a_n` a decreasing step size and
//! `lambda` a small ridge term that keeps the iterates bounded. No sample is
//! ever stored.
//!
//! Besides the estimator the crate carries seeded samplers for a set of
//! reference distributions and quadrature-based oracles used to check the
//! estimator against the smoothed density it is chasing. Everything here is
//! `no_std` + `alloc`; IO, parallel replication and the command-line tool
//! live in the `streammode` crate.

#![no_std]

extern crate alloc;

pub mod distribution;
mod error;
pub mod estimator;
pub mod kernel;
pub mod oracle;
pub mod quad;
pub mod rng;
pub mod schedule;

pub use distribution::{DistributionFamily, DistributionSpec};
pub use error::Error;
pub use estimator::{
    run_stream, EstimatorConfig, EstimatorState, ModeEstimator, Phase, StreamError,
    StreamOutcome, TracePoint, TraceRecorder,
};
pub use kernel::{KernelFamily, KernelSpec};
pub use rng::SeededRng;
pub use schedule::StepSchedule;

pub type Result<T, E = Error> = core::result::Result<T, E>;
