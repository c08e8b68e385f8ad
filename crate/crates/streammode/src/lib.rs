//! Experiment harness, file formats and the `streammode` command-line tool
//! built on [`streammode_core`].

pub mod config;
mod error;
pub mod harness;
pub mod io;
pub mod report;
pub mod verify;

pub use error::{Failure, FailureKind};
