//! Command-line front end for `fdban-core`: JSON reports, CSV sweeps and the
//! acceptance self-test.

pub mod commands;
pub mod report;
pub mod selftest;

pub use commands::{run, Outcome};
